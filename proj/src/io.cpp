#include "evoeq/io.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <iomanip>
#include <sstream>

namespace evoeq {

using nlohmann::json;

namespace {

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot open for writing: " + p.string());
  out << std::setprecision(17);
  return out;
}

std::ifstream open_in(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("cannot open for reading: " + p.string());
  return in;
}

cx parse_value(const json& v) {
  if (v.is_number()) return cx(v.get<double>(), 0.0);
  if (v.is_array() && v.size() == 2) return cx(v[0].get<double>(), v[1].get<double>());
  throw std::invalid_argument("expected a number or a [re, im] pair");
}

json value_to_json(cx v) {
  if (v.imag() == 0.0) return v.real();
  return json::array({v.real(), v.imag()});
}

}  // namespace

void write_signal_csv(const WeightedSignal& f, const std::filesystem::path& csv,
                      const std::filesystem::path& header_json) {
  std::ofstream out = open_out(csv);
  out << "t";
  for (int i = 0; i < f.dim(); ++i) out << ",re_" << i << ",im_" << i;
  out << "\n";
  for (int j = 0; j < f.grid().n; ++j) {
    out << f.grid().time(j);
    for (int i = 0; i < f.dim(); ++i)
      out << "," << f.values()(i, j).real() << "," << f.values()(i, j).imag();
    out << "\n";
  }
  json header = {{"t0", f.grid().t0},
                 {"dt", f.grid().dt},
                 {"n", f.grid().n},
                 {"nu", f.nu()},
                 {"dim", f.dim()}};
  open_out(header_json) << header.dump(2) << "\n";
}

WeightedSignal read_signal_csv(const std::filesystem::path& csv,
                               const std::filesystem::path& header_json) {
  json header = json::parse(open_in(header_json));
  TimeGrid grid = make_grid(header.at("t0"), header.at("dt"), header.at("n"));
  int dim = header.at("dim");
  Mat vals(dim, grid.n);
  std::ifstream in = open_in(csv);
  std::string line;
  std::getline(in, line);  // header row
  for (int j = 0; j < grid.n; ++j) {
    if (!std::getline(in, line)) throw std::runtime_error("signal csv: truncated");
    std::stringstream ss(line);
    std::string field;
    std::getline(ss, field, ',');  // t
    for (int i = 0; i < dim; ++i) {
      std::getline(ss, field, ',');
      double re = std::stod(field);
      std::getline(ss, field, ',');
      double im = std::stod(field);
      vals(i, j) = cx(re, im);
    }
  }
  return {grid, header.at("nu"), std::move(vals)};
}

void write_spectrum_csv(const Spectrum& s, const std::filesystem::path& csv) {
  std::ofstream out = open_out(csv);
  out << "omega";
  for (int i = 0; i < s.dim(); ++i) out << ",re_" << i << ",im_" << i;
  out << "\n";
  for (int k = 0; k < s.bins(); ++k) {
    out << s.freq(k);
    for (int i = 0; i < s.dim(); ++i)
      out << "," << s.coeffs()(i, k).real() << "," << s.coeffs()(i, k).imag();
    out << "\n";
  }
}

void write_operator_triplets(const SpMat& a, const std::filesystem::path& csv) {
  std::ofstream out = open_out(csv);
  out << "row,col,re,im\n";
  for (int k = 0; k < a.outerSize(); ++k)
    for (SpMat::InnerIterator it(a, k); it; ++it)
      out << it.row() << "," << it.col() << "," << it.value().real() << ","
          << it.value().imag() << "\n";
}

SampledKernel read_kernel_csv(const std::filesystem::path& csv) {
  std::ifstream in = open_in(csv);
  std::string line;
  std::vector<double> ts, vals;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == 't' || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string field;
    std::getline(ss, field, ',');
    double t = std::stod(field);
    std::getline(ss, field, ',');
    double v = std::stod(field);
    if (t < -1e-12) throw std::invalid_argument("kernel csv: support must lie in [0, inf)");
    ts.push_back(t);
    vals.push_back(v);
  }
  if (ts.size() < 2) throw std::invalid_argument("kernel csv: need at least two samples");
  double dt = ts[1] - ts[0];
  for (std::size_t i = 1; i < ts.size(); ++i)
    if (std::abs(ts[i] - ts[i - 1] - dt) > 1e-9 * dt)
      throw std::invalid_argument("kernel csv: grid must be uniform");
  SampledKernel k;
  k.dt = dt;
  k.values = Vec(vals.size());
  for (std::size_t i = 0; i < vals.size(); ++i) k.values(static_cast<int>(i)) = vals[i];
  return k;
}

Mat parse_matrix_json(const json& spec) {
  if (spec.contains("identity")) {
    int m = spec.at("identity");
    return Mat::Identity(m, m);
  }
  if (spec.contains("diag")) {
    const auto& d = spec.at("diag");
    Mat out = Mat::Zero(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) out(i, i) = parse_value(d[i]);
    return out;
  }
  if (spec.contains("scaled_identity")) {
    int m = spec.at("scaled_identity").at("dim");
    cx v = parse_value(spec.at("scaled_identity").at("value"));
    return Mat(v * Mat::Identity(m, m));
  }
  if (spec.contains("data")) {
    int r = spec.at("rows"), c = spec.at("cols");
    Mat out(r, c);
    const auto& data = spec.at("data");
    if (static_cast<int>(data.size()) != r * c)
      throw std::invalid_argument("matrix json: data length mismatch");
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) out(i, j) = parse_value(data[i * c + j]);
    return out;
  }
  throw std::invalid_argument("matrix json: expected identity/diag/scaled_identity/data");
}

Mat parse_matrix_json(const json& spec);

LawPtr parse_law_json(const json& spec) {
  std::string kind = spec.at("kind");
  auto coeff = [&]() { return SpMat(parse_matrix_json(spec.at("matrix")).sparseView()); };
  auto children = [&]() {
    std::vector<LawPtr> out;
    for (const auto& c : spec.at("children")) out.push_back(parse_law_json(c));
    return out;
  };
  if (kind == "const") return law::constant(coeff());
  if (kind == "zinv") return law::zinv_pow(spec.at("power"), coeff());
  if (kind == "series") {
    std::vector<SpMat> cs;
    for (const auto& c : spec.at("coefficients"))
      cs.push_back(SpMat(parse_matrix_json(c).sparseView()));
    return law::series(std::move(cs), spec.at("radius"));
  }
  if (kind == "delay") return law::delay(spec.at("h"), coeff());
  if (kind == "frac") return law::frac_pow(spec.at("alpha"), coeff());
  if (kind == "kernel") {
    SampledKernel k;
    k.dt = spec.at("dt");
    const auto& vals = spec.at("samples");
    k.values = Vec(vals.size());
    for (std::size_t i = 0; i < vals.size(); ++i)
      k.values(static_cast<int>(i)) = parse_value(vals[i]);
    return law::kernel_lt(std::move(k), coeff());
  }
  if (kind == "sum") return law::sum(children());
  if (kind == "product") {
    auto cs = children();
    if (cs.size() != 2) throw std::invalid_argument("law json: product takes two children");
    return law::product(cs[0], cs[1]);
  }
  if (kind == "scale") {
    auto cs = children();
    if (cs.size() != 1) throw std::invalid_argument("law json: scale takes one child");
    return law::scale(parse_value(spec.at("lambda")), cs[0]);
  }
  if (kind == "block_diag") return law::block_diag(children());
  if (kind == "inverse") {
    auto cs = children();
    if (cs.size() != 1) throw std::invalid_argument("law json: inverse takes one child");
    return law::inverse(cs[0]);
  }
  throw std::invalid_argument("law json: unknown kind '" + kind + "'");
}

namespace {

json matrix_to_json(const SpMat& a) {
  Mat dense(a);
  bool diag = is_diagonal(a) && a.rows() == a.cols();
  if (diag) {
    json d = json::array();
    for (int i = 0; i < dense.rows(); ++i) d.push_back(value_to_json(dense(i, i)));
    return json{{"diag", d}};
  }
  json data = json::array();
  for (int i = 0; i < dense.rows(); ++i)
    for (int j = 0; j < dense.cols(); ++j) data.push_back(value_to_json(dense(i, j)));
  return json{{"rows", dense.rows()}, {"cols", dense.cols()}, {"data", data}};
}

}  // namespace

json law_to_json(const MaterialLaw& m) {
  json out;
  switch (m.kind) {
    case LawKind::Const:
      out = {{"kind", "const"}, {"matrix", matrix_to_json(m.coeff)}};
      break;
    case LawKind::ZInvPow:
      out = {{"kind", "zinv"}, {"power", m.power}, {"matrix", matrix_to_json(m.coeff)}};
      break;
    case LawKind::Series: {
      json cs = json::array();
      for (const auto& c : m.series_coeffs) cs.push_back(matrix_to_json(c));
      out = {{"kind", "series"}, {"radius", m.series_radius}, {"coefficients", cs}};
      break;
    }
    case LawKind::Delay:
      out = {{"kind", "delay"}, {"h", m.delay_h}, {"matrix", matrix_to_json(m.coeff)}};
      break;
    case LawKind::FracPow:
      out = {{"kind", "frac"}, {"alpha", m.alpha}, {"matrix", matrix_to_json(m.coeff)}};
      break;
    case LawKind::KernelLT: {
      json samples = json::array();
      for (int i = 0; i < m.kernel.size(); ++i) samples.push_back(value_to_json(m.kernel.values(i)));
      out = {{"kind", "kernel"},
             {"dt", m.kernel.dt},
             {"samples", samples},
             {"matrix", matrix_to_json(m.coeff)}};
      break;
    }
    case LawKind::Sum:
    case LawKind::Product:
    case LawKind::Scale:
    case LawKind::Inverse: {
      json cs = json::array();
      for (const auto& c : m.children) cs.push_back(law_to_json(*c));
      const char* kind = m.kind == LawKind::Sum       ? "sum"
                         : m.kind == LawKind::Product ? "product"
                         : m.kind == LawKind::Scale   ? "scale"
                                                      : "inverse";
      out = {{"kind", kind}, {"children", cs}};
      if (m.kind == LawKind::Scale) out["lambda"] = value_to_json(m.scalar);
      break;
    }
    case LawKind::Block: {
      json cs = json::array();
      for (std::size_t i = 0; i < m.block_rows.size(); ++i) cs.push_back(law_to_json(*m.block_rows[i][i]));
      out = {{"kind", "block_diag"}, {"children", cs}};
      break;
    }
  }
  return out;
}

json certificate_to_json(const PositivityCertificate& cert) {
  return json{{"nu0", cert.nu0},
              {"c_sampled_min", cert.c},
              {"c_cert", cert.c_cert},
              {"ok", cert.ok},
              {"witness", {cert.witness.real(), cert.witness.imag()}},
              {"samples", cert.sample_count},
              {"note", "sampled positivity bound, not a proof; c_cert = 0.9 * min"}};
}

}  // namespace evoeq
