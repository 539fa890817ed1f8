#include "slp/evaluation.hpp"

#include <algorithm>

#include "json.hpp"
#include "slp/errors.hpp"
#include "slp/metrics.hpp"

namespace slp::eval {

namespace {

using Json = nlohmann::json;

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

std::optional<double> mean_of(const std::vector<SampleScore>& scores, std::optional<double> SampleScore::*field) {
  if (scores.empty()) return std::nullopt;
  double total = 0.0;
  for (const auto& s : scores) {
    if (!(s.*field)) return std::nullopt;
    total += *(s.*field);
  }
  return total / static_cast<double>(scores.size());
}

Json protocol_json(const EvalProtocol& p) {
  return {{"split", p.split ? Json(pose::to_string(*p.split)) : Json(nullptr)},
          {"train_signer", p.train_signer ? Json(*p.train_signer) : Json(nullptr)},
          {"test_signer", p.test_signer ? Json(*p.test_signer) : Json(nullptr)},
          {"compute_text", p.compute_text},
          {"compute_dtw", p.compute_dtw},
          {"gloss_mode", p.gloss_mode},
          {"max_decode_tokens", p.max_decode_tokens}};
}

}  // namespace

data::Dataset select_for_protocol(const data::Dataset& dataset, const EvalProtocol& protocol) {
  data::SampleFilter filter;
  filter.split = protocol.split;
  filter.signer_id = protocol.test_signer;
  return data::select(dataset, filter);
}

MetricReport back_translate_evaluate(const PoseProducer& producer,
                                     const translation::TranslationModel<float>& slt,
                                     const text::Vocabulary& slt_vocab, const data::Dataset& dataset,
                                     const EvalProtocol& protocol) {
  if (slt.vocab_size() != slt_vocab.size()) throw ConfigError("translation model and vocabulary disagree");
  if (protocol.max_decode_tokens < 1) throw ConfigError("max_decode_tokens must be >= 1");
  MetricReport report;
  report.protocol = protocol;
  for (const auto& sample : select_for_protocol(dataset, protocol)) {
    SampleScore score;
    score.id = sample.record.id;
    const auto produced = producer(sample);
    if (protocol.compute_text) {
      const auto ids = translation::greedy_decode(slt, production::to_tensor<float>(produced),
                                                  static_cast<std::size_t>(protocol.max_decode_tokens));
      score.hypothesis = slt_vocab.decode(ids);
      const auto hyp = text::tokenize(score.hypothesis);
      const auto ref = text::tokenize(sample.record.text);
      score.bleu1 = metrics::bleu_n(hyp, ref, 1);
      score.bleu4 = metrics::bleu_n(hyp, ref, 4);
      score.rouge_l = metrics::rouge_l(hyp, ref);
    }
    if (protocol.compute_dtw) score.dtw = metrics::dtw_distance(produced, sample.pose);
    report.per_sample.push_back(std::move(score));
  }
  report.count = report.per_sample.size();
  report.bleu1 = mean_of(report.per_sample, &SampleScore::bleu1);
  report.bleu4 = mean_of(report.per_sample, &SampleScore::bleu4);
  report.rouge_l = mean_of(report.per_sample, &SampleScore::rouge_l);
  report.dtw_mean = mean_of(report.per_sample, &SampleScore::dtw);
  return report;
}

MetricReport back_translate_evaluate(const production::ProductionModel<float>& slp,
                                     const text::Vocabulary& slp_vocab,
                                     const translation::TranslationModel<float>& slt,
                                     const text::Vocabulary& slt_vocab, const data::Dataset& dataset,
                                     const EvalProtocol& protocol, const production::DecodingConfig& decoding) {
  if (!(slp_vocab == slt_vocab)) throw ConfigError("production and translation vocabularies differ");
  if (slp.vocab_size() != slp_vocab.size()) throw ConfigError("production model and vocabulary disagree");
  const PoseProducer producer = [&](const data::Sample& sample) {
    const auto& source = data::source_text(sample.record, protocol.gloss_mode);
    return production::generate(slp, source, slp_vocab, decoding).sequence;
  };
  return back_translate_evaluate(producer, slt, slt_vocab, dataset, protocol);
}

std::vector<std::vector<MetricReport>> signer_cross_eval(const std::vector<ModelPair>& models,
                                                         const std::vector<std::string>& test_signers,
                                                         const data::Dataset& dataset, const EvalProtocol& protocol,
                                                         const production::DecodingConfig& decoding) {
  auto known = [&](const std::string& signer) {
    return std::any_of(dataset.begin(), dataset.end(), [&](const auto& s) { return s.record.signer_id == signer; });
  };
  for (const auto& m : models) {
    if (!known(m.train_signer)) throw ConfigError("unknown signer '" + m.train_signer + "'");
  }
  for (const auto& s : test_signers) {
    if (!known(s)) throw ConfigError("unknown signer '" + s + "'");
  }
  std::vector<std::vector<MetricReport>> matrix;
  for (const auto& m : models) {
    std::vector<MetricReport> row;
    for (const auto& signer : test_signers) {
      auto p = protocol;
      p.train_signer = m.train_signer;
      p.test_signer = signer;
      row.push_back(back_translate_evaluate(*m.slp, *m.vocab, *m.slt, *m.vocab, dataset, p, decoding));
    }
    matrix.push_back(std::move(row));
  }
  return matrix;
}

std::string report_to_json(const MetricReport& report) {
  Json per_sample = Json::array();
  for (const auto& s : report.per_sample) {
    per_sample.push_back({{"id", s.id},
                          {"hypothesis", s.hypothesis},
                          {"bleu1", optional_number(s.bleu1)},
                          {"bleu4", optional_number(s.bleu4)},
                          {"rougeL", optional_number(s.rouge_l)},
                          {"dtw", optional_number(s.dtw)}});
  }
  const Json doc = {{"protocol", protocol_json(report.protocol)},
                    {"per_sample", per_sample},
                    {"aggregates",
                     {{"count", report.count},
                      {"bleu_1", optional_number(report.bleu1)},
                      {"bleu_4", optional_number(report.bleu4)},
                      {"rouge_l", optional_number(report.rouge_l)},
                      {"dtw_mean", optional_number(report.dtw_mean)}}},
                    {"fingerprint", report.fingerprint}};
  return doc.dump(2) + "\n";
}

void validate_report_json(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("report is not JSON: ") + e.what());
  }
  auto fail = [](const std::string& what) { throw FormatError("report: " + what); };
  auto number_or_null = [](const Json& j) { return j.is_null() || j.is_number(); };
  if (!doc.is_object()) fail("not an object");
  for (const char* key : {"protocol", "per_sample", "aggregates", "fingerprint"}) {
    if (!doc.contains(key)) fail(std::string("missing ") + key);
  }
  if (!doc["protocol"].is_object() || !doc["per_sample"].is_array() || !doc["fingerprint"].is_string()) {
    fail("wrong member types");
  }
  for (const auto& s : doc["per_sample"]) {
    if (!s.is_object() || !s.contains("id") || !s["id"].is_string()) fail("per_sample entry without id");
    for (const char* key : {"bleu1", "bleu4", "rougeL", "dtw"}) {
      if (!s.contains(key) || !number_or_null(s[key])) fail(std::string("per_sample.") + key);
    }
  }
  const auto& agg = doc["aggregates"];
  if (!agg.is_object() || !agg.contains("count") || !agg["count"].is_number_unsigned()) fail("aggregates.count");
  for (const char* key : {"bleu_1", "bleu_4", "rouge_l", "dtw_mean"}) {
    if (!agg.contains(key) || !number_or_null(agg[key])) fail(std::string("aggregates.") + key);
    if (agg[key].is_number()) {
      const double v = agg[key].get<double>();
      const bool bounded = std::string(key) == "dtw_mean" ? v >= 0.0 : (v >= 0.0 && v <= 100.0);
      if (!bounded) fail(std::string("aggregates.") + key + " out of range");
    }
  }
  if (agg["count"].get<std::size_t>() != doc["per_sample"].size()) fail("count does not match per_sample");
}

}  // namespace slp::eval
