#include <json.hpp>

#include "accentid/common.hpp"
#include "accentid/learn.hpp"

namespace accentid::learn {

namespace {

using nlohmann::json;

constexpr const char* kFormat = "accentid-model/1";

int argmax_row(const Eigen::MatrixXd& P, Eigen::Index i) {
  Eigen::Index best = 0;
  P.row(i).maxCoeff(&best);
  return static_cast<int>(best);
}

std::size_t payload_dim(const TrainedModel& m) {
  if (const auto* svm = std::get_if<MulticlassSvm>(&m.payload))
    return svm->pairs.empty() ? 0 : static_cast<std::size_t>(svm->pairs.front().svm.w.size());
  return static_cast<std::size_t>(std::get<MlrModel>(m.payload).W.cols());
}

void check_consistent(const TrainedModel& m) {
  const auto in = static_cast<std::size_t>(m.standardizer.dim());
  std::size_t expect = in;
  if (m.mask) {
    for (auto idx : m.mask->indices)
      if (idx < 0 || static_cast<std::size_t>(idx) >= in)
        throw DataError("model: mask index " + std::to_string(idx) + " outside input width " + std::to_string(in));
    expect = m.mask->indices.size();
  }
  if (payload_dim(m) != expect)
    throw DataError("model: classifier expects " + std::to_string(payload_dim(m)) + " features but pipeline yields " +
                    std::to_string(expect));
}

Eigen::VectorXd vec_from(const json& j) {
  auto v = unpack_doubles(j.get<std::string>());
  return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}
std::string vec_to(const Eigen::VectorXd& v) {
  return pack_doubles(std::span<const double>(v.data(), static_cast<std::size_t>(v.size())));
}

}  // namespace

Prediction predict(const TrainedModel& model, const Eigen::MatrixXd& X) {
  if (X.cols() != model.input_dim())
    throw DataError("predict: model expects " + std::to_string(model.input_dim()) + " features, got " +
                    std::to_string(X.cols()));
  Eigen::MatrixXd Z = model.standardizer.transform(X);
  if (model.mask) Z = model.mask->apply(Z);
  Prediction out;
  out.labels.resize(static_cast<std::size_t>(X.rows()));
  if (const auto* svm = std::get_if<MulticlassSvm>(&model.payload)) {
    for (Eigen::Index i = 0; i < Z.rows(); ++i)
      out.labels[static_cast<std::size_t>(i)] = svm->predict(Z.row(i).transpose());
  } else {
    Eigen::MatrixXd P = std::get<MlrModel>(model.payload).probabilities(Z);
    for (Eigen::Index i = 0; i < P.rows(); ++i) out.labels[static_cast<std::size_t>(i)] = argmax_row(P, i);
    out.probabilities = std::move(P);
  }
  return out;
}

Prediction predict(const TrainedModel& model, const SparseMatrix& X) {
  if (X.cols() != model.input_dim())
    throw DataError("predict: model expects " + std::to_string(model.input_dim()) + " features, got " +
                    std::to_string(X.cols()));
  const auto* mlr = std::get_if<MlrModel>(&model.payload);
  if (!mlr || model.mask) throw ConfigError("predict: sparse input requires an unmasked MLR model");
  Prediction out;
  Eigen::MatrixXd P = mlr->probabilities(X);
  out.labels.resize(static_cast<std::size_t>(X.rows()));
  for (Eigen::Index i = 0; i < P.rows(); ++i) out.labels[static_cast<std::size_t>(i)] = argmax_row(P, i);
  out.probabilities = std::move(P);
  return out;
}

std::string serialize_model(const TrainedModel& model) {
  check_consistent(model);
  json j;
  j["format"] = kFormat;
  j["kind"] = model.kind == ModelKind::svm_smo ? "svm_smo" : "mlr";
  j["classes"] = model.classes;
  j["config"] = json::parse(model.config_json);
  j["metadata"] = json::parse(model.metadata_json);
  j["standardizer"] = {{"dim", model.standardizer.dim()},
                       {"mean", vec_to(model.standardizer.mean())},
                       {"scale", vec_to(model.standardizer.scale())}};
  if (model.mask) j["mask"] = {{"n", model.mask->n}, {"indices", model.mask->indices}};
  else j["mask"] = nullptr;
  if (const auto* svm = std::get_if<MulticlassSvm>(&model.payload)) {
    json pairs = json::array();
    for (const auto& p : svm->pairs)
      pairs.push_back({{"positive", p.positive},
                       {"negative", p.negative},
                       {"w", vec_to(p.svm.w)},
                       {"b", p.svm.b},
                       {"C", p.svm.C},
                       {"tol", p.svm.tol},
                       {"iterations", p.svm.iterations}});
    j["svm"] = {{"num_classes", svm->num_classes}, {"pairs", pairs}};
  } else {
    const auto& m = std::get<MlrModel>(model.payload);
    const Eigen::MatrixXd Wr = m.W;  // column-major storage, rows = classes
    j["mlr"] = {{"classes", m.W.rows()},
                {"features", m.W.cols()},
                {"W", pack_doubles(std::span<const double>(Wr.data(), static_cast<std::size_t>(Wr.size())))},
                {"bias", vec_to(m.bias)},
                {"l2", m.l2},
                {"iterations", m.iterations}};
  }
  return j.dump(2) + "\n";
}

TrainedModel deserialize_model(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("model: malformed JSON: ") + e.what());
  }
  try {
    if (j.value("format", "") != kFormat) throw DataError("model: unsupported format tag");
    TrainedModel m;
    const std::string kind = j.at("kind").get<std::string>();
    m.classes = j.at("classes").get<std::vector<std::string>>();
    m.config_json = j.at("config").dump();
    m.metadata_json = j.at("metadata").dump();
    const auto& s = j.at("standardizer");
    m.standardizer = Standardizer(vec_from(s.at("mean")), vec_from(s.at("scale")));
    if (!j.at("mask").is_null()) {
      select::SelectionMask mask;
      mask.n = j["mask"].at("n").get<std::size_t>();
      mask.indices = j["mask"].at("indices").get<std::vector<Eigen::Index>>();
      m.mask = std::move(mask);
    }
    if (kind == "svm_smo") {
      m.kind = ModelKind::svm_smo;
      MulticlassSvm svm;
      svm.num_classes = j.at("svm").at("num_classes").get<int>();
      for (const auto& p : j["svm"].at("pairs")) {
        MulticlassSvm::Pair pair{p.at("positive").get<int>(), p.at("negative").get<int>(), {}};
        pair.svm.w = vec_from(p.at("w"));
        pair.svm.b = p.at("b").get<double>();
        pair.svm.C = p.at("C").get<double>();
        pair.svm.tol = p.at("tol").get<double>();
        pair.svm.iterations = p.at("iterations").get<std::size_t>();
        svm.pairs.push_back(std::move(pair));
      }
      m.payload = std::move(svm);
    } else if (kind == "mlr") {
      m.kind = ModelKind::mlr;
      MlrModel mlr;
      const auto& r = j.at("mlr");
      const auto K = r.at("classes").get<Eigen::Index>();
      const auto d = r.at("features").get<Eigen::Index>();
      auto w = unpack_doubles(r.at("W").get<std::string>());
      if (static_cast<Eigen::Index>(w.size()) != K * d) throw DataError("model: weight matrix size mismatch");
      mlr.W = Eigen::Map<Eigen::MatrixXd>(w.data(), K, d);
      mlr.bias = vec_from(r.at("bias"));
      mlr.l2 = r.at("l2").get<double>();
      mlr.iterations = r.at("iterations").get<std::size_t>();
      m.payload = std::move(mlr);
    } else {
      throw DataError("model: unknown kind " + kind);
    }
    check_consistent(m);
    return m;
  } catch (const json::exception& e) {
    throw DataError(std::string("model: missing or invalid field: ") + e.what());
  }
}

}  // namespace accentid::learn
