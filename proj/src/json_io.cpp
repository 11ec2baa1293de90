#include "memprobe/json_io.hpp"

namespace memprobe {

ojson to_json(const GenerationParams& p) {
  ojson j;
  j["model"] = p.model;
  j["temperature"] = p.temperature;
  j["max_tokens"] = p.max_tokens;
  j["prompt_template"] = p.prompt_template;
  j["system_message"] = p.system_message ? ojson(*p.system_message) : ojson(nullptr);
  return j;
}

GenerationParams params_from_json(const ojson& j) {
  GenerationParams p;
  p.model = j.value("model", std::string{});
  p.temperature = j.value("temperature", 0.0);
  p.max_tokens = j.value("max_tokens", 50);
  p.prompt_template = j.value("prompt_template", std::string(kDefaultPromptTemplate));
  if (auto it = j.find("system_message"); it != j.end() && !it->is_null()) {
    p.system_message = it->get<std::string>();
  }
  return p;
}

ojson to_json(const ScoreRecord& s) {
  ojson j;
  j["lcs_len"] = s.lcs_len;
  j["m"] = s.m;
  j["n"] = s.n;
  j["recall"] = s.recall;
  j["precision"] = s.precision;
  j["f_measure"] = s.f_measure;
  j["high_similarity"] = s.high_similarity;
  return j;
}

ScoreRecord score_from_json(const ojson& j) {
  ScoreRecord s;
  s.lcs_len = j.at("lcs_len").get<std::size_t>();
  s.m = j.at("m").get<std::size_t>();
  s.n = j.at("n").get<std::size_t>();
  s.recall = j.at("recall").get<double>();
  s.precision = j.at("precision").get<double>();
  s.f_measure = j.at("f_measure").get<double>();
  s.high_similarity = j.at("high_similarity").get<bool>();
  return s;
}

ojson to_json(const Completion& c) {
  ojson j;
  j["request_id"] = c.request_id;
  j["params"] = to_json(c.params);
  j["prompt_text"] = c.prompt_text;
  j["output_text"] = c.output_text;
  j["provider_name"] = c.provider_name;
  j["latency_ms"] = c.latency.count();
  j["finish_reason"] = to_string(c.finish_reason);
  j["timestamp"] = c.timestamp;
  return j;
}

Completion completion_from_json(const ojson& j) {
  Completion c;
  c.request_id = j.at("request_id").get<std::string>();
  c.params = params_from_json(j.at("params"));
  c.prompt_text = j.at("prompt_text").get<std::string>();
  c.output_text = j.at("output_text").get<std::string>();
  c.provider_name = j.at("provider_name").get<std::string>();
  c.latency = std::chrono::milliseconds(j.at("latency_ms").get<long long>());
  c.finish_reason = parse_finish_reason(j.at("finish_reason").get<std::string>());
  c.timestamp = j.at("timestamp").get<std::string>();
  return c;
}

ojson to_json(const RougeConfig& r) {
  ojson j;
  j["beta"] = r.beta;
  j["high_similarity_threshold"] = r.high_similarity_threshold;
  j["case_fold"] = r.case_fold;
  j["strip_punctuation"] = r.strip_punctuation;
  return j;
}

RougeConfig rouge_from_json(const ojson& j) {
  RougeConfig r;
  r.beta = j.value("beta", r.beta);
  r.high_similarity_threshold = j.value("high_similarity_threshold", r.high_similarity_threshold);
  r.case_fold = j.value("case_fold", r.case_fold);
  r.strip_punctuation = j.value("strip_punctuation", r.strip_punctuation);
  return r;
}

}  // namespace memprobe
