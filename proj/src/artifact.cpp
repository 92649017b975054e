#include "mlasce/artifact.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mlasce/errors.hpp"

namespace mlasce {

namespace {

using json = nlohmann::json;

json vec(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd to_vec(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

const char* norm_name(ScoreNorm n) { return n == ScoreNorm::UnitVariance ? "unit-variance" : "kernel-scaled"; }

ScoreNorm norm_from(const std::string& s) {
  if (s == "unit-variance") return ScoreNorm::UnitVariance;
  if (s == "kernel-scaled") return ScoreNorm::KernelScaled;
  throw ConfigError("artifact: unknown score norm '" + s + "'");
}

// Gaussian smoothness is stored as 0 since JSON has no infinity.
double nu_out(Smoothness nu) { return nu == Smoothness::Gaussian ? 0.0 : smoothness_value(nu); }
Smoothness nu_in(double v) { return v == 0.0 ? Smoothness::Gaussian : smoothness_from_value(v); }

}  // namespace

std::string artifact_to_string(const MultilevelEmulator& em) {
  json j;
  j["format"] = "mlasce-model";
  j["version"] = kArtifactVersion;
  j["budget"] = em.budget();
  j["spent"] = em.spent();
  j["score_norm"] = norm_name(em.norm());
  j["domain"] = {{"lower", vec(em.domain().lower)}, {"upper", vec(em.domain().upper)}};
  json levels = json::array();
  for (const auto& lv : em.levels()) {
    const KernelSpec& s = lv.model.spec();
    json X = json::array();
    for (Eigen::Index i = 0; i < lv.model.size(); ++i) X.push_back(vec(lv.model.inputs().row(i).transpose()));
    levels.push_back({{"level", lv.level},
                      {"cost_per_eval", lv.cost_per_eval},
                      {"weight", lv.weight},
                      {"grid_size", lv.grid_size},
                      {"nu", nu_out(s.nu)},
                      {"lambda", s.lambda},
                      {"sigma2", s.sigma2},
                      {"nugget", s.nugget},
                      {"norm_previous", lv.norm_previous},
                      {"norm_current", lv.norm_current},
                      {"score", lv.score},
                      {"X", X},
                      {"y", vec(lv.model.outputs())}});
  }
  j["levels"] = levels;
  json ledger = json::array();
  for (const auto& e : em.ledger())
    ledger.push_back({{"iteration", e.iteration},
                      {"level", e.level},
                      {"x", vec(e.x)},
                      {"value", e.value},
                      {"cost", e.cost},
                      {"lambda", e.lambda},
                      {"sigma2", e.sigma2},
                      {"scores", e.scores}});
  j["ledger"] = ledger;
  return j.dump(1) + "\n";
}

MultilevelEmulator artifact_from_string(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (j.value("format", "") != "mlasce-model") throw ConfigError("artifact: not a model file");
    if (j.at("version").get<int>() != kArtifactVersion)
      throw ConfigError("artifact: unsupported version " + j.at("version").dump());
    Domain domain{to_vec(j.at("domain").at("lower")), to_vec(j.at("domain").at("upper"))};
    domain.validate();

    std::vector<LevelState> levels;
    for (const json& lj : j.at("levels")) {
      const json& Xj = lj.at("X");
      const Eigen::VectorXd y = to_vec(lj.at("y"));
      if (Xj.size() != static_cast<std::size_t>(y.size()) || y.size() == 0)
        throw ConfigError("artifact: level design and outputs differ in size");
      PointSet X(y.size(), domain.dim());
      for (std::size_t i = 0; i < Xj.size(); ++i) {
        const Eigen::VectorXd row = to_vec(Xj[i]);
        if (row.size() != domain.dim()) throw ConfigError("artifact: design point of wrong dimension");
        X.row(static_cast<Eigen::Index>(i)) = row.transpose();
      }
      KernelSpec spec{nu_in(lj.at("nu").get<double>()), lj.at("lambda").get<double>(), lj.at("sigma2").get<double>(),
                      lj.at("nugget").get<double>()};
      levels.push_back(LevelState{lj.at("level").get<std::size_t>(), lj.at("cost_per_eval").get<double>(),
                                  lj.at("weight").get<double>(), lj.at("grid_size").get<Eigen::Index>(),
                                  GPModel(std::move(X), y, spec), lj.at("norm_previous").get<double>(),
                                  lj.at("norm_current").get<double>(), lj.at("score").get<double>()});
    }
    std::vector<LedgerEntry> ledger;
    for (const json& e : j.at("ledger"))
      ledger.push_back({e.at("iteration").get<std::size_t>(), e.at("level").get<std::size_t>(), to_vec(e.at("x")),
                        e.at("value").get<double>(), e.at("cost").get<double>(), e.at("lambda").get<double>(),
                        e.at("sigma2").get<double>(), e.at("scores").get<std::vector<double>>()});
    return MultilevelEmulator(std::move(domain), j.at("budget").get<double>(),
                              norm_from(j.at("score_norm").get<std::string>()), std::move(levels), std::move(ledger));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("artifact: malformed document: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("artifact: ") + e.what());
  }
}

void save_artifact(const MultilevelEmulator& emulator, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write artifact '" + path + "'");
  out << artifact_to_string(emulator);
  if (!out) throw ConfigError("failed writing artifact '" + path + "'");
}

MultilevelEmulator load_artifact(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open artifact '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return artifact_from_string(ss.str());
}

}  // namespace mlasce
