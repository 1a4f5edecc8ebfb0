#include "qzlora/pipeline/report.hpp"

#include "qzlora/error.hpp"

#include <cstdio>
#include <sstream>

namespace qzlora::pipeline {

using nlohmann::json;

std::vector<double> EvaluationRecord::per_sample_accuracies() const {
  std::vector<double> out;
  for (const auto& [id, acc] : samples) out.push_back(acc);
  return out;
}

json to_json(const EvaluationRecord& e) {
  json samples = json::array();
  for (const auto& [id, acc] : e.samples) samples.push_back({{"subject_id", id}, {"accuracy", acc}});
  json j = {{"topic_id", e.topic_id},
            {"condition", e.condition},
            {"quiz_id", e.quiz_id},
            {"samples", samples},
            {"mean_accuracy", e.mean_accuracy}};
  if (e.input_mean_accuracy) j["input_mean_accuracy"] = *e.input_mean_accuracy;
  return j;
}

EvaluationRecord evaluation_from_json(const json& j) {
  EvaluationRecord e;
  e.topic_id = j.at("topic_id").get<std::string>();
  e.condition = j.at("condition").get<std::string>();
  e.quiz_id = j.at("quiz_id").get<std::string>();
  for (const auto& s : j.at("samples")) {
    e.samples.emplace_back(s.at("subject_id").get<std::string>(), s.at("accuracy").get<double>());
  }
  e.mean_accuracy = j.at("mean_accuracy").get<double>();
  if (j.contains("input_mean_accuracy")) e.input_mean_accuracy = j.at("input_mean_accuracy").get<double>();
  return e;
}

std::string sweep_label(int k) {
  return selection::Condition::make(selection::ConditionKind::QZLoRATopK, k, selection::Style::Realistic).label();
}

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json summary_json(const stats::Summary& s) {
  return {{"n", s.n},           {"mean", s.mean}, {"median", s.median}, {"std", optional_number(s.std)},
          {"min", s.min},       {"max", s.max},   {"q1", s.q1},         {"q3", s.q3}};
}

json correlation_json(const stats::CorrelationResult& c) {
  return {{"n", c.n},         {"r", c.r},           {"r_squared", c.r_squared},
          {"slope", c.slope}, {"intercept", c.intercept}, {"p_value", c.p_value}};
}

template <class Fn>
json guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    return {{"error", e.what()}};
  }
}

std::string pct(const json& v) {
  if (v.is_null()) return "";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v.get<double>() * 100.0);
  return buf;
}

std::string num(const json& v) {
  if (v.is_null()) return "";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v.get<double>());
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

json build_stats(const ReportInputs& in) {
  std::vector<std::string> labels;
  for (const auto& c : in.conditions) labels.push_back(c.label());

  stats::AccuracyTable table;
  for (const auto& topic : in.topics) {
    const auto row = in.evaluations.find(topic);
    if (row == in.evaluations.end()) continue;
    for (const auto& label : labels) {
      if (auto e = row->second.find(label); e != row->second.end()) table[topic][label] = e->second.mean_accuracy;
    }
  }

  json doc;
  doc["topics"] = in.topics;
  doc["conditions"] = labels;
  doc["seed"] = in.seed;

  json per_topic = json::object();
  for (const auto& [topic, row] : table) per_topic[topic] = row;
  doc["per_topic"] = per_topic;

  json summary = json::object();
  for (const auto& label : labels) {
    summary[label] = guarded([&] { return summary_json(stats::aggregate_condition(table, {label}).at(label)); });
  }
  doc["summary"] = summary;

  doc["net_advantage"] = guarded([&] {
    const auto m = stats::net_advantage(table, labels);
    return json{{"conditions", m.conditions}, {"cells", m.cells}, {"comparable", m.comparable}, {"excluded", m.excluded}};
  });

  stats::KTable ktable;
  for (int k : in.ks) {
    for (const auto& topic : in.sweep_topics) {
      const auto row = in.evaluations.find(topic);
      if (row == in.evaluations.end()) continue;
      if (auto e = row->second.find(sweep_label(k)); e != row->second.end()) ktable[k][topic] = e->second.mean_accuracy;
    }
  }
  json sweep = {{"topics", in.sweep_topics}};
  sweep["points"] = guarded([&] {
    json points = json::array();
    for (const auto& p : stats::k_sweep(ktable, in.ks, in.sweep_topics)) {
      points.push_back({{"k", p.k}, {"n", p.n}, {"mean", p.mean}, {"ci95_half_width", optional_number(p.ci95_half_width)}});
    }
    return points;
  });
  doc["k_sweep"] = sweep;

  json io = json::array();
  for (int k : in.ks) {
    std::vector<double> xs;
    std::vector<double> ys;
    for (const auto& topic : in.sweep_topics) {
      const auto row = in.evaluations.find(topic);
      if (row == in.evaluations.end()) continue;
      const auto e = row->second.find(sweep_label(k));
      if (e == row->second.end() || !e->second.input_mean_accuracy) continue;
      xs.push_back(*e->second.input_mean_accuracy);
      ys.push_back(e->second.mean_accuracy);
    }
    json entry = guarded([&] { return correlation_json(stats::correlate(xs, ys)); });
    entry["k"] = k;
    io.push_back(entry);
  }
  doc["input_output_correlation"] = io;

  const std::string baseline = selection::Condition::make(selection::ConditionKind::NoLoRA, 0).label();
  doc["popularity_correlation"] = guarded([&] {
    std::vector<double> acc;
    std::vector<std::uint64_t> counts;
    for (const auto& [topic, row] : table) {
      const auto a = row.find(baseline);
      const auto c = in.available_counts.find(topic);
      if (a == row.end() || c == in.available_counts.end()) continue;
      acc.push_back(a->second);
      counts.push_back(c->second);
    }
    json j = correlation_json(stats::popularity_correlation(acc, counts));
    j["baseline"] = baseline;
    return j;
  });
  return doc;
}

std::vector<fs::path> write_report(const fs::path& dir, const ReportInputs& inputs) {
  const json doc = build_stats(inputs);
  std::vector<fs::path> written;
  auto emit = [&](const std::string& name, const std::string& text) {
    atomic_write(dir / name, text);
    written.push_back(dir / name);
  };
  emit("stats.json", pretty_json(doc));

  std::ostringstream box;
  box << "condition,n,mean_pct,median_pct,std_pct,min_pct,q1_pct,q3_pct,max_pct\n";
  for (const auto& label : doc["conditions"]) {
    const json& s = doc["summary"][label.get<std::string>()];
    if (s.contains("error")) continue;
    box << csv_field(label.get<std::string>()) << "," << s["n"].get<std::size_t>() << "," << pct(s["mean"]) << ","
        << pct(s["median"]) << "," << pct(s["std"]) << "," << pct(s["min"]) << "," << pct(s["q1"]) << ","
        << pct(s["q3"]) << "," << pct(s["max"]) << "\n";
  }
  emit("boxplot.csv", box.str());

  std::ostringstream matrix;
  const json& na = doc["net_advantage"];
  if (!na.contains("error")) {
    matrix << "row\\column";
    for (const auto& c : na["conditions"]) matrix << "," << csv_field(c.get<std::string>());
    matrix << "\n";
    for (std::size_t i = 0; i < na["conditions"].size(); ++i) {
      matrix << csv_field(na["conditions"][i].get<std::string>());
      for (const auto& cell : na["cells"][i]) matrix << "," << cell.get<int>();
      matrix << "\n";
    }
  }
  emit("net_advantage.csv", matrix.str());

  std::ostringstream sweep;
  sweep << "k,n,mean_pct,ci95_low_pct,ci95_high_pct\n";
  if (doc["k_sweep"]["points"].is_array()) {
    for (const auto& p : doc["k_sweep"]["points"]) {
      const double mean = p["mean"].get<double>();
      const json half = p["ci95_half_width"];
      sweep << p["k"].get<int>() << "," << p["n"].get<std::size_t>() << "," << pct(mean) << ","
            << (half.is_null() ? "" : pct(mean - half.get<double>())) << ","
            << (half.is_null() ? "" : pct(mean + half.get<double>())) << "\n";
    }
  }
  emit("k_sweep.csv", sweep.str());

  std::ostringstream corr;
  corr << "analysis,k,n,r,r_squared,slope,intercept,p_value\n";
  auto corr_row = [&](const std::string& name, const std::string& k, const json& c) {
    if (c.contains("error")) return;
    corr << name << "," << k << "," << c["n"].get<std::size_t>() << "," << num(c["r"]) << "," << num(c["r_squared"])
         << "," << num(c["slope"]) << "," << num(c["intercept"]) << "," << num(c["p_value"]) << "\n";
  };
  for (const auto& c : doc["input_output_correlation"]) corr_row("input_output", std::to_string(c["k"].get<int>()), c);
  corr_row("popularity", "", doc["popularity_correlation"]);
  emit("correlations.csv", corr.str());

  std::ostringstream topics;
  topics << "topic,condition,accuracy_pct\n";
  for (const auto& [topic, row] : doc["per_topic"].items()) {
    for (const auto& [label, acc] : row.items()) topics << topic << "," << csv_field(label) << "," << pct(acc) << "\n";
  }
  emit("per_topic.csv", topics.str());
  return written;
}

}  // namespace qzlora::pipeline
