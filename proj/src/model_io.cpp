#include "esn/model_io.hpp"

#include <fstream>

namespace esn {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "esn-coupling-model";
constexpr int kVersion = 1;

json dense(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd dense_from(const json& rows, Eigen::Index expect_rows, Eigen::Index expect_cols) {
  if (!rows.is_array() || static_cast<Eigen::Index>(rows.size()) != expect_rows)
    throw Error(ErrorKind::InvalidConfig, "model: matrix has the wrong number of rows");
  Eigen::MatrixXd m(expect_rows, expect_cols);
  for (Eigen::Index i = 0; i < expect_rows; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    if (static_cast<Eigen::Index>(row.size()) != expect_cols)
      throw Error(ErrorKind::InvalidConfig, "model: matrix row has the wrong width");
    for (Eigen::Index j = 0; j < expect_cols; ++j) m(i, j) = row[static_cast<std::size_t>(j)].get<double>();
  }
  return m;
}

}  // namespace

json to_json(const EsnParams& p) {
  return {{"n_nodes", p.n_nodes},
          {"input_dim", p.input_dim},
          {"output_dim", p.output_dim},
          {"sigma", p.sigma},
          {"spectral_radius", p.spectral_radius},
          {"leak", p.leak},
          {"ridge_beta", p.ridge_beta},
          {"density", p.density},
          {"seed", p.seed}};
}

EsnParams params_from_json(const json& j) {
  EsnParams p;
  p.n_nodes = j.at("n_nodes").get<Eigen::Index>();
  p.input_dim = j.at("input_dim").get<Eigen::Index>();
  p.output_dim = j.at("output_dim").get<Eigen::Index>();
  p.sigma = j.at("sigma").get<double>();
  p.spectral_radius = j.at("spectral_radius").get<double>();
  p.leak = j.at("leak").get<double>();
  p.ridge_beta = j.at("ridge_beta").get<double>();
  p.density = j.at("density").get<double>();
  p.seed = j.at("seed").get<std::uint64_t>();
  return p;
}

json to_json(const CoupledSystemSpec& s) {
  json drive;
  if (const auto* r = std::get_if<RosslerParams>(&s.drive))
    drive = {{"model", "rossler"}, {"a", r->a}, {"b", r->b}, {"c", r->c}};
  else {
    const auto& l = std::get<LorenzParams>(s.drive);
    drive = {{"model", "lorenz"}, {"sigma", l.sigma}, {"rho", l.rho}, {"beta", l.beta}};
  }
  return {{"drive", drive},
          {"response", {{"a", s.response.a}, {"b", s.response.b}, {"c", s.response.c}}},
          {"epsilon", s.epsilon},
          {"initial_state", s.initial_state}};
}

CoupledSystemSpec spec_from_json(const json& j) {
  CoupledSystemSpec s;
  const auto& d = j.at("drive");
  if (d.at("model") == "rossler")
    s.drive = RosslerParams{d.at("a").get<double>(), d.at("b").get<double>(), d.at("c").get<double>()};
  else
    s.drive = LorenzParams{d.at("sigma").get<double>(), d.at("rho").get<double>(), d.at("beta").get<double>()};
  const auto& r = j.at("response");
  s.response = {r.at("a").get<double>(), r.at("b").get<double>(), r.at("c").get<double>()};
  s.epsilon = j.at("epsilon").get<double>();
  s.initial_state = j.at("initial_state").get<std::array<double, 6>>();
  return s;
}

json to_json(const EsnModel& model) {
  const auto& m = model.matrices;
  json triplets = json::array();
  for (Eigen::Index row = 0; row < m.w_res.outerSize(); ++row)
    for (SparseMatrixR::InnerIterator it(m.w_res, row); it; ++it) triplets.push_back({it.row(), it.col(), it.value()});

  json specs = json::array();
  for (const auto& s : model.training.specs) specs.push_back(to_json(s));
  const auto& t = model.training;

  return {{"format", kFormat},
          {"version", kVersion},
          {"params", to_json(model.params)},
          {"layout", {{"drive_columns", model.layout.drive}, {"response_columns", model.layout.response}}},
          {"w_in", dense(m.w_in)},
          {"w_res", {{"rows", m.w_res.rows()}, {"cols", m.w_res.cols()}, {"triplets", std::move(triplets)}}},
          {"w_out", m.w_out ? dense(*m.w_out) : json(nullptr)},
          {"training",
           {{"specs", std::move(specs)},
            {"requested_nodes", t.requested_nodes},
            {"transient_steps", t.transient_steps},
            {"series_count", t.series_count},
            {"series_steps", t.series_steps},
            {"spinup_steps", t.spinup_steps},
            {"total_columns", t.total_columns},
            {"dt", t.dt}}}};
}

EsnModel model_from_json(const json& doc) {
  try {
    if (doc.at("format") != kFormat || doc.at("version") != kVersion)
      throw Error(ErrorKind::InvalidConfig, "model: unsupported format or version");
    EsnModel model;
    model.params = params_from_json(doc.at("params"));
    validate(model.params);
    model.layout.drive = doc.at("layout").at("drive_columns").get<std::vector<int>>();
    model.layout.response = doc.at("layout").at("response_columns").get<std::vector<int>>();
    const Eigen::Index n = model.params.n_nodes;
    if (model.layout.input_dim() != model.params.input_dim || model.layout.output_dim() != model.params.output_dim)
      throw Error(ErrorKind::InvalidConfig, "model: layout disagrees with params");

    model.matrices.w_in = dense_from(doc.at("w_in"), n, model.params.input_dim);
    const auto& res = doc.at("w_res");
    if (res.at("rows").get<Eigen::Index>() != n || res.at("cols").get<Eigen::Index>() != n)
      throw Error(ErrorKind::InvalidConfig, "model: w_res has the wrong shape");
    std::vector<Eigen::Triplet<double>> entries;
    for (const auto& t : res.at("triplets")) {
      const auto i = t.at(0).get<Eigen::Index>(), j = t.at(1).get<Eigen::Index>();
      if (i < 0 || i >= n || j < 0 || j >= n) throw Error(ErrorKind::InvalidConfig, "model: w_res index out of range");
      entries.emplace_back(i, j, t.at(2).get<double>());
    }
    model.matrices.w_res.resize(n, n);
    model.matrices.w_res.setFromTriplets(entries.begin(), entries.end());
    model.matrices.w_res.makeCompressed();
    if (!doc.at("w_out").is_null()) model.matrices.w_out = dense_from(doc.at("w_out"), model.params.output_dim, n);

    const auto& t = doc.at("training");
    for (const auto& s : t.at("specs")) model.training.specs.push_back(spec_from_json(s));
    model.training.requested_nodes = t.at("requested_nodes").get<Eigen::Index>();
    model.training.transient_steps = t.at("transient_steps").get<Eigen::Index>();
    model.training.series_count = t.at("series_count").get<Eigen::Index>();
    model.training.series_steps = t.at("series_steps").get<Eigen::Index>();
    model.training.spinup_steps = t.at("spinup_steps").get<Eigen::Index>();
    model.training.total_columns = t.at("total_columns").get<Eigen::Index>();
    model.training.dt = t.at("dt").get<double>();
    return model;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidConfig, std::string("model: malformed document: ") + e.what());
  }
}

void save_model(const EsnModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << to_json(model).dump() << '\n';
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

EsnModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "model file not found: " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidConfig, path.string() + ": " + e.what());
  }
  return model_from_json(doc);
}

}  // namespace esn
