#include "mtmkl/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "mtmkl/error.hpp"

namespace mtmkl {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
    if (pos >= s.size()) break;
    const std::size_t start = pos;
    while (pos < s.size() && s[pos] != ' ' && s[pos] != '\t') ++pos;
    out.push_back(s.substr(start, pos - start));
  }
  return out;
}

template <typename T>
T parse_number(std::string_view token, std::size_t line_no, const char* what) {
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  T value{};
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw ParseError("line " + std::to_string(line_no) + ": bad " + what + " '" +
                     std::string(token) + "'");
  }
  return value;
}

RawInput parse_cell(std::string_view cell, std::size_t line_no) {
  const auto tokens = split_ws(cell);
  if (tokens.size() == 1 && tokens.front().find(':') == std::string_view::npos) {
    return std::string(tokens.front());
  }
  NumericInput pairs;
  pairs.reserve(tokens.size());
  for (auto token : tokens) {
    const auto colon = token.find(':');
    if (colon == std::string_view::npos) {
      throw ParseError("line " + std::to_string(line_no) + ": expected index:value, got '" +
                       std::string(token) + "'");
    }
    pairs.emplace_back(parse_number<FeatureIndex>(token.substr(0, colon), line_no, "index"),
                       parse_number<double>(token.substr(colon + 1), line_no, "value"));
  }
  return pairs;
}

void append_double(std::string& out, double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, ptr);
}

}  // namespace

RawDataset read_raw_dataset(std::istream& in) {
  RawDataset data;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view body(line);
    body = trim(body.substr(0, body.find('#')));
    if (body.empty()) continue;

    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (std::size_t pos = 0; pos <= body.size(); ++pos) {
      if (pos == body.size() || body[pos] == '|') {
        fields.push_back(body.substr(start, pos - start));
        start = pos + 1;
      }
    }
    const auto head = split_ws(fields.front());
    if (head.size() != 2) {
      throw ParseError("line " + std::to_string(line_no) + ": expected '<label> <task_id>'");
    }
    RawExample ex;
    ex.label = parse_number<int>(head[0], line_no, "label");
    if (ex.label != 1 && ex.label != -1) {
      throw ParseError("line " + std::to_string(line_no) + ": label must be -1 or +1");
    }
    ex.task = parse_number<std::size_t>(head[1], line_no, "task id");
    for (std::size_t f = 1; f < fields.size(); ++f) ex.cells.push_back(parse_cell(fields[f], line_no));
    if (!data.examples.empty() && ex.cells.size() != data.num_views()) {
      throw ParseError("line " + std::to_string(line_no) + ": expected " +
                       std::to_string(data.num_views()) + " views, got " +
                       std::to_string(ex.cells.size()));
    }
    data.examples.push_back(std::move(ex));
  }
  return data;
}

RawDataset read_raw_dataset_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open dataset file '" + path + "'");
  return read_raw_dataset(in);
}

void write_raw_dataset(std::ostream& out, const RawDataset& data) {
  std::string line;
  for (const auto& ex : data.examples) {
    line.clear();
    line += ex.label > 0 ? "+1 " : "-1 ";
    line += std::to_string(ex.task);
    for (const auto& cell : ex.cells) {
      line += " |";
      if (const auto* text = std::get_if<std::string>(&cell)) {
        line += ' ';
        line += *text;
        continue;
      }
      for (const auto& [index, value] : std::get<NumericInput>(cell)) {
        line += ' ';
        line += std::to_string(index);
        line += ':';
        append_double(line, value);
      }
    }
    line += '\n';
    out << line;
  }
}

MultiTaskDataset::MultiTaskDataset(std::vector<int> labels, std::vector<std::size_t> task_of,
                                   std::size_t num_tasks, std::vector<View> views)
    : labels_(std::move(labels)), task_of_(std::move(task_of)), views_(std::move(views)) {
  if (labels_.size() != task_of_.size()) throw ParseError("labels and task ids differ in length");
  for (int y : labels_) {
    if (y != 1 && y != -1) throw ParseError("label must be -1 or +1");
  }
  std::size_t max_task = 0;
  for (std::size_t t : task_of_) max_task = std::max(max_task, t + 1);
  num_tasks_ = num_tasks == 0 ? max_task : num_tasks;
  if (max_task > num_tasks_) {
    throw ParseError("task id " + std::to_string(max_task - 1) + " >= number of tasks " +
                     std::to_string(num_tasks_));
  }
  for (std::size_t m = 0; m < views_.size(); ++m) {
    if (views_[m].rows.size() != labels_.size()) {
      throw ParseError("view " + std::to_string(m) + " has a different number of rows");
    }
    for (const auto& row : views_[m].rows) {
      if (row.extent() > views_[m].dim) {
        throw ParseError("view " + std::to_string(m) + " row exceeds its dimension " +
                         std::to_string(views_[m].dim));
      }
    }
  }
  index_sets_.assign(num_tasks_, {});
  for (std::size_t i = 0; i < task_of_.size(); ++i) index_sets_[task_of_[i]].push_back(i);
}

MultiTaskDataset MultiTaskDataset::subset(std::span<const std::size_t> indices) const {
  std::vector<int> labels;
  std::vector<std::size_t> tasks;
  std::vector<View> views(views_.size());
  for (std::size_t m = 0; m < views_.size(); ++m) views[m].dim = views_[m].dim;
  for (std::size_t i : indices) {
    labels.push_back(labels_.at(i));
    tasks.push_back(task_of_[i]);
    for (std::size_t m = 0; m < views_.size(); ++m) views[m].rows.push_back(views_[m].rows[i]);
  }
  return MultiTaskDataset(std::move(labels), std::move(tasks), num_tasks_, std::move(views));
}

MultiTaskDataset MultiTaskDataset::collapse_tasks() const {
  return MultiTaskDataset(labels_, std::vector<std::size_t>(size(), 0), 1, views_);
}

MultiTaskDataset MultiTaskDataset::single_task(std::size_t t) const {
  MultiTaskDataset part = subset(index_sets_.at(t));
  return MultiTaskDataset(part.labels_, std::vector<std::size_t>(part.size(), 0), 1,
                          std::move(part.views_));
}

MultiTaskDataset featurize(const RawDataset& raw, std::span<const FeatureMap> maps,
                           std::size_t num_tasks) {
  const std::size_t num_views = raw.num_views();
  if (!raw.examples.empty() && maps.size() != num_views) {
    throw InfeasibleConfig("dataset has " + std::to_string(num_views) + " views but " +
                           std::to_string(maps.size()) + " feature maps were given");
  }
  std::vector<View> views(maps.size());
  std::vector<int> labels;
  std::vector<std::size_t> tasks;
  labels.reserve(raw.examples.size());
  tasks.reserve(raw.examples.size());
  for (const auto& ex : raw.examples) {
    labels.push_back(ex.label);
    tasks.push_back(ex.task);
    for (std::size_t m = 0; m < maps.size(); ++m) views[m].rows.push_back(maps[m].apply(ex.cells[m]));
  }
  for (std::size_t m = 0; m < maps.size(); ++m) {
    views[m].dim = maps[m].dimension();
    if (views[m].dim == 0) {
      for (const auto& row : views[m].rows) views[m].dim = std::max(views[m].dim, row.extent());
    }
  }
  return MultiTaskDataset(std::move(labels), std::move(tasks), num_tasks, std::move(views));
}

RawDataset to_raw(const MultiTaskDataset& data) {
  RawDataset raw;
  raw.examples.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    RawExample ex;
    ex.label = data.label(i);
    ex.task = data.task(i);
    for (std::size_t m = 0; m < data.num_views(); ++m) {
      const FeatureVector& row = data.features(m, i);
      NumericInput pairs;
      pairs.reserve(row.stored());
      for (std::size_t k = 0; k < row.stored(); ++k) pairs.emplace_back(row.index_at(k), row.value_at(k));
      ex.cells.emplace_back(std::move(pairs));
    }
    raw.examples.push_back(std::move(ex));
  }
  return raw;
}

}  // namespace mtmkl
