#include "blockdep/io.hpp"

#include <cstdio>
#include <fstream>

#include "blockdep/errors.hpp"

namespace blockdep::io {

namespace {

const Json& need(const Json& j, const std::string& key) {
  if (!j.contains(key))
    throw ValidationError("config: missing key \"" + key + "\"");
  return j.at(key);
}

double need_number(const Json& j, const std::string& key) {
  const Json& v = need(j, key);
  if (!v.is_number())
    throw ValidationError("config: \"" + key + "\" must be a number");
  return v.get<double>();
}

std::uint64_t need_u64(const Json& j, const std::string& key) {
  const Json& v = need(j, key);
  if (!v.is_number_unsigned() && !v.is_number_integer())
    throw ValidationError("config: \"" + key + "\" must be an integer");
  return v.get<std::uint64_t>();
}

std::string need_string(const Json& j, const std::string& key) {
  const Json& v = need(j, key);
  if (!v.is_string())
    throw ValidationError("config: \"" + key + "\" must be a string");
  return v.get<std::string>();
}

}  // namespace

Partition partition_from_json(const Json& j) {
  Partition partition;
  partition.p = static_cast<std::size_t>(need_u64(j, "p"));
  const Json& cells = need(j, "cells");
  if (!cells.is_array())
    throw ValidationError("config: \"cells\" must be an array of arrays");
  for (const Json& cell : cells) {
    if (!cell.is_array())
      throw ValidationError("config: each cell must be an array");
    std::vector<std::uint32_t> c;
    for (const Json& idx : cell) {
      const std::int64_t one_based = idx.get<std::int64_t>();
      if (one_based < 1)
        throw ValidationError("config: cell indices are 1-based");
      c.push_back(static_cast<std::uint32_t>(one_based - 1));
    }
    partition.cells.push_back(std::move(c));
  }
  return partition;
}

Json partition_to_json(const Partition& partition) {
  Json j;
  j["p"] = partition.p;
  Json cells = Json::array();
  for (const auto& cell : partition.cells) {
    Json c = Json::array();
    for (std::uint32_t idx : cell) c.push_back(idx + 1);
    cells.push_back(std::move(c));
  }
  j["cells"] = std::move(cells);
  return j;
}

LossKind loss_from_json(const Json& j) {
  const std::string kind = need_string(j, "kind");
  if (kind == "squared") return LossKind::squared();
  if (kind == "absolute") return LossKind::absolute();
  if (kind == "huber") return LossKind::huber(need_number(j, "eta"));
  throw ValidationError("config: unknown loss kind \"" + kind + "\"");
}

Json loss_to_json(const LossKind& loss) {
  Json j;
  j["kind"] = loss.name();
  if (loss.kind == LossKind::Kind::huber) j["eta"] = loss.eta;
  return j;
}

NoiseSpec noise_from_json(const Json& j) {
  const std::string kind = need_string(j, "kind");
  if (kind == "gaussian") return NoiseSpec::gaussian(need_number(j, "sigma2"));
  if (kind == "student_t") return NoiseSpec::student_t(need_number(j, "nu"));
  if (kind == "two_point") return NoiseSpec::two_point(need_number(j, "a"));
  throw ValidationError("config: unknown noise kind \"" + kind + "\"");
}

Json noise_to_json(const NoiseSpec& noise) {
  Json j;
  j["kind"] = noise.name();
  switch (noise.kind) {
    case NoiseSpec::Kind::gaussian:
      j["sigma2"] = noise.sigma2;
      break;
    case NoiseSpec::Kind::student_t:
      j["nu"] = noise.nu;
      break;
    case NoiseSpec::Kind::two_point:
      j["a"] = noise.a;
      break;
  }
  return j;
}

Theta0Spec theta0_from_json(const Json& j) {
  const std::string kind = need_string(j, "kind");
  if (kind == "gaussian") return Theta0Spec::gaussian(need_number(j, "sigma2"));
  if (kind == "two_point") return Theta0Spec::two_point(need_number(j, "a"));
  if (kind == "explicit") {
    const Json& values = need(j, "values");
    if (!values.is_array())
      throw ValidationError("config: theta0 \"values\" must be an array");
    return Theta0Spec::explicit_vec(values.get<std::vector<double>>());
  }
  throw ValidationError("config: unknown theta0 kind \"" + kind + "\"");
}

Json theta0_to_json(const Theta0Spec& spec) {
  Json j;
  j["kind"] = spec.name();
  switch (spec.kind) {
    case Theta0Spec::Kind::explicit_vec:
      j["values"] = spec.values;
      break;
    case Theta0Spec::Kind::gaussian:
      j["sigma2"] = spec.sigma2;
      break;
    case Theta0Spec::Kind::two_point:
      j["a"] = spec.a;
      break;
  }
  return j;
}

CovarianceSpec covariance_from_json(const Json& j) {
  CovarianceSpec spec;
  spec.partition = partition_from_json(need(j, "partition"));
  const std::string model = need_string(j, "model");
  if (model == "identity") {
    spec.model = CovarianceSpec::Model::identity;
  } else if (model == "equicorrelated") {
    spec.model = CovarianceSpec::Model::equicorrelated;
    spec.rho = need_number(j, "rho");
  } else if (model == "explicit") {
    spec.model = CovarianceSpec::Model::explicit_blocks;
    const Json& blocks = need(j, "blocks");
    if (!blocks.is_array())
      throw ValidationError("config: \"blocks\" must be an array of matrices");
    for (const Json& bj : blocks) {
      const auto rows = bj.get<std::vector<std::vector<double>>>();
      Matrix block(rows.size(), rows.empty() ? 0 : rows[0].size());
      for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != block.cols)
          throw ValidationError("config: ragged covariance block");
        for (std::size_t c = 0; c < block.cols; ++c) block(r, c) = rows[r][c];
      }
      spec.blocks.push_back(std::move(block));
    }
  } else {
    throw ValidationError("config: unknown covariance model \"" + model + "\"");
  }
  return spec;
}

DesignSpec design_from_json(const Json& j) {
  DesignSpec spec;
  spec.n = static_cast<std::size_t>(need_u64(j, "n"));
  spec.p = static_cast<std::size_t>(need_u64(j, "p"));
  spec.covariance = covariance_from_json(need(j, "covariance"));
  const std::string family = need_string(j, "family");
  if (family == "gaussian")
    spec.family = EntryFamily::gaussian;
  else if (family == "rademacher")
    spec.family = EntryFamily::rademacher;
  else if (family == "uniform")
    spec.family = EntryFamily::uniform;
  else if (family == "centered_exponential")
    spec.family = EntryFamily::centered_exponential;
  else if (family == "student_t") {
    spec.family = EntryFamily::student_t;
    spec.student_nu = need_number(j, "student_nu");
  } else {
    throw ValidationError("config: unknown entry family \"" + family + "\"");
  }
  if (j.contains("allow_unsafe")) spec.allow_unsafe = j.at("allow_unsafe").get<bool>();
  if (j.contains("entry_scale")) spec.entry_scale = j.at("entry_scale").get<double>();
  return spec;
}

Json design_to_json(const DesignSpec& spec) {
  Json j;
  j["n"] = spec.n;
  j["p"] = spec.p;
  Json cov;
  cov["partition"] = partition_to_json(spec.covariance.partition);
  switch (spec.covariance.model) {
    case CovarianceSpec::Model::identity:
      cov["model"] = "identity";
      break;
    case CovarianceSpec::Model::equicorrelated:
      cov["model"] = "equicorrelated";
      cov["rho"] = spec.covariance.rho;
      break;
    case CovarianceSpec::Model::explicit_blocks: {
      cov["model"] = "explicit";
      Json blocks = Json::array();
      for (const Matrix& b : spec.covariance.blocks) {
        Json rows = Json::array();
        for (std::size_t r = 0; r < b.rows; ++r) {
          Json row = Json::array();
          for (std::size_t c = 0; c < b.cols; ++c) row.push_back(b(r, c));
          rows.push_back(std::move(row));
        }
        blocks.push_back(std::move(rows));
      }
      cov["blocks"] = std::move(blocks);
      break;
    }
  }
  j["covariance"] = std::move(cov);
  j["family"] = family_name(spec.family);
  if (spec.family == EntryFamily::student_t) j["student_nu"] = spec.student_nu;
  if (spec.allow_unsafe) j["allow_unsafe"] = true;
  if (spec.entry_scale != 1.0) j["entry_scale"] = spec.entry_scale;
  return j;
}

StateEvolutionInput state_input_from_json(const Json& j) {
  StateEvolutionInput input;
  input.tau0 = need_number(j, "tau0");
  input.lambda = need_number(j, "lambda");
  input.loss = loss_from_json(need(j, "loss"));
  input.noise = noise_from_json(need(j, "noise"));
  input.pi0_second_moment = need_number(j, "pi0_second_moment");
  if (j.contains("quad_nodes")) input.quad_nodes = j.at("quad_nodes").get<int>();
  if (j.contains("mc_samples"))
    input.mc_samples = j.at("mc_samples").get<std::size_t>();
  if (j.contains("mc_seed")) input.mc_seed = j.at("mc_seed").get<std::uint64_t>();
  return input;
}

ExperimentConfig experiment_from_json(const Json& j) {
  ExperimentConfig config;
  config.design = design_from_json(need(j, "design"));
  config.loss = loss_from_json(need(j, "loss"));
  config.lambda = need_number(j, "lambda");
  config.theta0 = theta0_from_json(need(j, "theta0"));
  config.noise = noise_from_json(need(j, "noise"));
  config.replications = static_cast<std::size_t>(need_u64(j, "replications"));
  config.master_seed = need_u64(j, "master_seed");
  if (j.contains("tol")) config.tol = j.at("tol").get<double>();
  if (j.contains("max_iter"))
    config.max_iter = j.at("max_iter").get<std::size_t>();
  if (j.contains("max_excluded_fraction"))
    config.max_excluded_fraction = j.at("max_excluded_fraction").get<double>();
  return config;
}

Json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file " + path.string());
  Json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("malformed JSON in " + path.string() + ": " +
                          e.what());
  }
  return j;
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void write_result(const std::filesystem::path& out_dir, const Json& result) {
  std::filesystem::create_directories(out_dir);
  write_json_file(out_dir / "result.json", result);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_csv(const std::filesystem::path& path,
               const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  for (std::size_t i = 0; i < header.size(); ++i)
    out << (i ? "," : "") << header[i];
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i)
      out << (i ? "," : "") << format_double(row[i]);
    out << '\n';
  }
}

void dump_matrix(const std::filesystem::path& bin_path, const Matrix& m,
                 const Json& sidecar) {
  std::ofstream out(bin_path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + bin_path.string());
  out.write(reinterpret_cast<const char*>(m.data.data()),
            static_cast<std::streamsize>(m.data.size() * sizeof(double)));
  std::filesystem::path side = bin_path;
  side += ".json";
  write_json_file(side, sidecar);
}

Matrix load_matrix(const std::filesystem::path& bin_path, std::size_t rows,
                   std::size_t cols) {
  std::ifstream in(bin_path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + bin_path.string());
  Matrix m(rows, cols);
  in.read(reinterpret_cast<char*>(m.data.data()),
          static_cast<std::streamsize>(m.data.size() * sizeof(double)));
  if (static_cast<std::size_t>(in.gcount()) != m.data.size() * sizeof(double))
    throw ValidationError("matrix file " + bin_path.string() + " too short");
  return m;
}

}  // namespace blockdep::io
