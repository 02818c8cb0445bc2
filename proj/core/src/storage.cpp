// Copyright 2026 The softctrl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "softctrl/storage.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string_view>
#include <system_error>
#include <vector>

#include "softctrl/errors.hpp"
#include "softctrl/version.hpp"

namespace softctrl {

namespace {

constexpr int kFormatVersion = 1;

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view token, const std::string& context) {
  double value = 0.0;
  const auto res =
      std::from_chars(token.data(), token.data() + token.size(), value);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size()) {
    throw MalformedFileError("cannot parse number '" + std::string(token) +
                             "' in " + context);
  }
  return value;
}

long long parse_integer(std::string_view token, const std::string& context) {
  long long value = 0;
  const auto res =
      std::from_chars(token.data(), token.data() + token.size(), value);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size()) {
    throw MalformedFileError("cannot parse integer '" + std::string(token) +
                             "' in " + context);
  }
  return value;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::ofstream open_for_write(const std::string& path) {
  std::ofstream file(path, std::ios::binary);
  if (!file) {
    throw std::runtime_error("cannot open '" + path + "' for writing");
  }
  return file;
}

std::ifstream open_for_read(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) {
    throw std::runtime_error("cannot open '" + path + "' for reading");
  }
  return file;
}

// Metadata line: "# softctrl <kind> format_version=<v> fingerprint=<hex>".
void write_metadata(std::ofstream& file, const std::string& kind,
                    std::uint64_t fingerprint) {
  file << "# softctrl " << kind << " format_version=" << kFormatVersion
       << " fingerprint=" << fingerprint_to_hex(fingerprint) << "\n";
}

std::uint64_t read_metadata(std::istream& file, const std::string& kind,
                            const std::string& path) {
  std::string line;
  if (!std::getline(file, line)) {
    throw MalformedFileError("'" + path + "' is empty");
  }
  const std::string prefix = "# softctrl " + kind + " format_version=";
  if (line.rfind(prefix, 0) != 0) {
    throw MalformedFileError("'" + path + "' is not a softctrl " + kind +
                             " file");
  }
  std::string_view rest = std::string_view(line).substr(prefix.size());
  const std::size_t space = rest.find(' ');
  if (space == std::string_view::npos) {
    throw MalformedFileError("'" + path + "' metadata line is truncated");
  }
  const long long version = parse_integer(rest.substr(0, space), path);
  if (version != kFormatVersion) {
    std::ostringstream msg;
    msg << "'" << path << "' has format version " << version << ", expected "
        << kFormatVersion;
    throw VersionMismatchError(msg.str());
  }
  rest.remove_prefix(space + 1);
  const std::string fp_prefix = "fingerprint=";
  if (rest.rfind(fp_prefix, 0) != 0) {
    throw MalformedFileError("'" + path + "' metadata lacks a fingerprint");
  }
  rest.remove_prefix(fp_prefix.size());
  std::uint64_t fingerprint = 0;
  const auto res = std::from_chars(rest.data(), rest.data() + rest.size(),
                                   fingerprint, 16);
  if (res.ec != std::errc() || res.ptr != rest.data() + rest.size()) {
    throw MalformedFileError("'" + path + "' has a malformed fingerprint");
  }
  return fingerprint;
}

void fnv_mix(std::uint64_t& hash, std::string_view bytes) {
  constexpr std::uint64_t kPrime = 1099511628211ULL;
  for (const char c : bytes) {
    hash ^= static_cast<unsigned char>(c);
    hash *= kPrime;
  }
}

std::string dataset_header(Eigen::Index n) {
  std::ostringstream header;
  header << "time,ydd,yd,y";
  for (Eigen::Index i = 1; i <= n; ++i) header << ",p_" << i;
  for (Eigen::Index i = 1; i <= n; ++i) header << ",target_" << i;
  return header.str();
}

std::string log_header(Eigen::Index n) {
  std::ostringstream header;
  header << "time,y_desired,y_actual,alpha";
  for (Eigen::Index i = 1; i <= n; ++i) header << ",var_" << i;
  for (Eigen::Index i = 1; i <= n; ++i) header << ",p_" << i;
  for (Eigen::Index i = 1; i <= n; ++i) header << ",pff_" << i;
  for (Eigen::Index i = 1; i <= n; ++i) header << ",u_" << i;
  return header.str();
}

// Reads one non-empty line or fails; used by the strict key-value formats.
std::string next_line(std::istream& file, const std::string& path) {
  std::string line;
  if (!std::getline(file, line)) {
    throw MalformedFileError("'" + path + "' ended unexpectedly");
  }
  return line;
}

std::string expect_key(std::istream& file, const std::string& key,
                       const std::string& path) {
  const std::string line = next_line(file, path);
  if (line.rfind(key + " ", 0) != 0) {
    throw MalformedFileError("'" + path + "' expected key '" + key +
                             "', found '" + line + "'");
  }
  return line.substr(key.size() + 1);
}

}  // namespace

std::uint64_t config_fingerprint(const RobotConfig& robot,
                                 const ExcitationProfile& profile) {
  std::uint64_t hash = 14695981039346656037ULL;  // FNV-1a offset basis
  std::ostringstream canon;
  canon << "segments=" << robot.segments
        << ";length=" << format_double(robot.segment_length)
        << ";mass=" << format_double(robot.segment_mass)
        << ";arm=" << format_double(robot.moment_arm)
        << ";stiffness=" << format_double(robot.passive_stiffness)
        << ";damping=" << format_double(robot.damping)
        << ";gravity=" << format_double(robot.gravity)
        << ";kind=" << to_string(profile.kind)
        << ";amplitude=" << format_double(profile.amplitude)
        << ";f_lo=" << format_double(profile.f_lo)
        << ";f_hi=" << format_double(profile.f_hi)
        << ";duration=" << format_double(profile.duration)
        << ";seed=" << profile.seed;
  fnv_mix(hash, canon.str());
  return hash;
}

std::string fingerprint_to_hex(std::uint64_t fingerprint) {
  char buf[17] = {};
  for (int i = 15; i >= 0; --i) {
    buf[i] = "0123456789abcdef"[fingerprint & 0xF];
    fingerprint >>= 4;
  }
  return std::string(buf, 16);
}

void save_dataset(const std::string& path, const CollectedData& data,
                  std::uint64_t fingerprint) {
  const Eigen::Index n = data.output_dim();
  auto file = open_for_write(path);
  write_metadata(file, "dataset", fingerprint);
  file << dataset_header(n) << "\n";
  for (Eigen::Index i = 0; i < data.count(); ++i) {
    file << format_double(data.times[i]);
    for (Eigen::Index r = 0; r < 3; ++r) {
      file << ',' << format_double(data.outputs(r, i));
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      file << ',' << format_double(data.applied(j, i));
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      file << ',' << format_double(data.residuals(i, j));
    }
    file << '\n';
  }
  if (!file) {
    throw std::runtime_error("failed to write '" + path + "'");
  }
}

LoadedDataset load_dataset(const std::string& path) {
  auto file = open_for_read(path);
  LoadedDataset loaded;
  loaded.fingerprint = read_metadata(file, "dataset", path);

  const std::string header = next_line(file, path);
  const auto columns = split(header, ',');
  if (columns.size() < 6 || (columns.size() - 4) % 2 != 0) {
    throw MalformedFileError("'" + path + "' has a malformed dataset header");
  }
  const auto n = static_cast<Eigen::Index>((columns.size() - 4) / 2);
  if (header != dataset_header(n)) {
    throw MalformedFileError("'" + path + "' has unexpected column names");
  }

  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(file, line)) {
    if (line.empty()) continue;
    const auto tokens = split(line, ',');
    if (static_cast<Eigen::Index>(tokens.size()) != 4 + 2 * n) {
      throw MalformedFileError("'" + path + "' row " +
                               std::to_string(rows.size() + 1) +
                               " has the wrong column count");
    }
    std::vector<double> row;
    row.reserve(tokens.size());
    for (const auto& token : tokens) row.push_back(parse_double(token, path));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) {
    throw MalformedFileError("'" + path + "' contains no data rows");
  }

  const auto count = static_cast<Eigen::Index>(rows.size());
  CollectedData& data = loaded.data;
  data.times.resize(count);
  data.outputs.resize(3, count);
  data.applied.resize(n, count);
  data.residuals.resize(count, n);
  for (Eigen::Index i = 0; i < count; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    data.times[i] = row[0];
    for (Eigen::Index r = 0; r < 3; ++r) data.outputs(r, i) = row[1 + r];
    for (Eigen::Index j = 0; j < n; ++j) {
      data.applied(j, i) = row[4 + j];
      data.residuals(i, j) = row[4 + n + j];
    }
  }
  return loaded;
}

void save_model(const std::string& path, const TrainedGp& gp,
                std::uint64_t fingerprint) {
  const Dataset& data = gp.dataset();
  const Hyperparameters& hp = gp.hyperparameters();
  auto file = open_for_write(path);
  file << "# softctrl model format_version=" << kFormatVersion << "\n";
  file << "fingerprint " << fingerprint_to_hex(fingerprint) << "\n";
  file << "tool_version " << kVersion << "\n";
  file << "input_dim " << data.input_dim() << "\n";
  file << "output_dim " << data.output_dim() << "\n";
  file << "count " << data.count() << "\n";
  file << "signal_variance " << format_double(hp.signal_variance) << "\n";
  file << "lengthscales";
  for (Eigen::Index d = 0; d < hp.lengthscales.size(); ++d) {
    file << ' ' << format_double(hp.lengthscales[d]);
  }
  file << "\n";
  file << "noise_variance";
  for (Eigen::Index i = 0; i < hp.noise_variance.size(); ++i) {
    file << ' ' << format_double(hp.noise_variance[i]);
  }
  file << "\n";
  file << "inputs " << data.inputs.rows() << ' ' << data.inputs.cols() << "\n";
  for (Eigen::Index r = 0; r < data.inputs.rows(); ++r) {
    for (Eigen::Index c = 0; c < data.inputs.cols(); ++c) {
      if (c > 0) file << ' ';
      file << format_double(data.inputs(r, c));
    }
    file << "\n";
  }
  file << "targets " << data.targets.rows() << ' ' << data.targets.cols()
       << "\n";
  for (Eigen::Index r = 0; r < data.targets.rows(); ++r) {
    for (Eigen::Index c = 0; c < data.targets.cols(); ++c) {
      if (c > 0) file << ' ';
      file << format_double(data.targets(r, c));
    }
    file << "\n";
  }
  if (!file) {
    throw std::runtime_error("failed to write '" + path + "'");
  }
}

namespace {

Eigen::MatrixXd read_matrix_block(std::istream& file, const std::string& key,
                                  const std::string& path) {
  const std::string dims_line = expect_key(file, key, path);
  const auto dims = split(dims_line, ' ');
  if (dims.size() != 2) {
    throw MalformedFileError("'" + path + "' has malformed dimensions for " +
                             key);
  }
  const auto rows = parse_integer(dims[0], path);
  const auto cols = parse_integer(dims[1], path);
  if (rows < 0 || cols < 0) {
    throw MalformedFileError("'" + path + "' has negative dimensions for " +
                             key);
  }
  Eigen::MatrixXd matrix(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const std::string line = next_line(file, path);
    const auto tokens = split(line, ' ');
    if (static_cast<Eigen::Index>(tokens.size()) != cols) {
      throw MalformedFileError("'" + path + "' matrix " + key + " row " +
                               std::to_string(r) + " is truncated");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      matrix(r, c) = parse_double(tokens[static_cast<std::size_t>(c)], path);
    }
  }
  return matrix;
}

}  // namespace

LoadedModel load_model(const std::string& path) {
  auto file = open_for_read(path);

  const std::string magic = next_line(file, path);
  const std::string prefix = "# softctrl model format_version=";
  if (magic.rfind(prefix, 0) != 0) {
    throw MalformedFileError("'" + path + "' is not a softctrl model file");
  }
  const long long version =
      parse_integer(std::string_view(magic).substr(prefix.size()), path);
  if (version != kFormatVersion) {
    std::ostringstream msg;
    msg << "'" << path << "' has format version " << version << ", expected "
        << kFormatVersion;
    throw VersionMismatchError(msg.str());
  }

  const std::string fp_text = expect_key(file, "fingerprint", path);
  std::uint64_t fingerprint = 0;
  const auto res = std::from_chars(fp_text.data(),
                                   fp_text.data() + fp_text.size(),
                                   fingerprint, 16);
  if (res.ec != std::errc() || res.ptr != fp_text.data() + fp_text.size()) {
    throw MalformedFileError("'" + path + "' has a malformed fingerprint");
  }
  expect_key(file, "tool_version", path);

  const auto input_dim = parse_integer(expect_key(file, "input_dim", path), path);
  const auto output_dim =
      parse_integer(expect_key(file, "output_dim", path), path);
  const auto count = parse_integer(expect_key(file, "count", path), path);

  Hyperparameters hp;
  hp.signal_variance =
      parse_double(expect_key(file, "signal_variance", path), path);
  {
    const std::string line = expect_key(file, "lengthscales", path);
    const auto tokens = split(line, ' ');
    hp.lengthscales.resize(static_cast<Eigen::Index>(tokens.size()));
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      hp.lengthscales[static_cast<Eigen::Index>(i)] =
          parse_double(tokens[i], path);
    }
  }
  {
    const std::string line = expect_key(file, "noise_variance", path);
    const auto tokens = split(line, ' ');
    hp.noise_variance.resize(static_cast<Eigen::Index>(tokens.size()));
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      hp.noise_variance[static_cast<Eigen::Index>(i)] =
          parse_double(tokens[i], path);
    }
  }

  Dataset dataset;
  dataset.inputs = read_matrix_block(file, "inputs", path);
  dataset.targets = read_matrix_block(file, "targets", path);
  if (dataset.inputs.rows() != input_dim ||
      dataset.targets.cols() != output_dim || dataset.inputs.cols() != count) {
    throw MalformedFileError("'" + path +
                             "' matrix dimensions disagree with the header");
  }

  try {
    return {TrainedGp(std::move(dataset), std::move(hp)), fingerprint};
  } catch (const std::invalid_argument& err) {
    throw MalformedFileError("'" + path + "' holds an invalid model: " +
                             err.what());
  }
}

void save_log(const std::string& path, const TrajectoryLog& log,
              std::uint64_t fingerprint) {
  const Eigen::Index n = log.output_dim();
  auto file = open_for_write(path);
  write_metadata(file, "log", fingerprint);
  file << log_header(n) << "\n";
  for (Eigen::Index k = 0; k < log.count(); ++k) {
    file << format_double(log.time[k]) << ','
         << format_double(log.y_desired[k]) << ','
         << format_double(log.y_actual[k]) << ','
         << format_double(log.alpha[k]);
    for (Eigen::Index j = 0; j < n; ++j) {
      file << ',' << format_double(log.variances(j, k));
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      file << ',' << format_double(log.p_applied(j, k));
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      file << ',' << format_double(log.p_ff(j, k));
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      file << ',' << format_double(log.u(j, k));
    }
    file << '\n';
  }
  if (!file) {
    throw std::runtime_error("failed to write '" + path + "'");
  }
}

TrajectoryLog load_log(const std::string& path) {
  auto file = open_for_read(path);
  read_metadata(file, "log", path);

  const std::string header = next_line(file, path);
  const auto columns = split(header, ',');
  if (columns.size() < 8 || (columns.size() - 4) % 4 != 0) {
    throw MalformedFileError("'" + path + "' has a malformed log header");
  }
  const auto n = static_cast<Eigen::Index>((columns.size() - 4) / 4);
  if (header != log_header(n)) {
    throw MalformedFileError("'" + path + "' has unexpected column names");
  }

  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(file, line)) {
    if (line.empty()) continue;
    const auto tokens = split(line, ',');
    if (static_cast<Eigen::Index>(tokens.size()) != 4 + 4 * n) {
      throw MalformedFileError("'" + path + "' row " +
                               std::to_string(rows.size() + 1) +
                               " has the wrong column count");
    }
    std::vector<double> row;
    row.reserve(tokens.size());
    for (const auto& token : tokens) row.push_back(parse_double(token, path));
    rows.push_back(std::move(row));
  }

  TrajectoryLog log;
  const auto count = static_cast<Eigen::Index>(rows.size());
  log.time.resize(count);
  log.y_desired.resize(count);
  log.y_actual.resize(count);
  log.alpha.resize(count);
  log.variances.resize(n, count);
  log.p_applied.resize(n, count);
  log.p_ff.resize(n, count);
  log.u.resize(n, count);
  for (Eigen::Index k = 0; k < count; ++k) {
    const auto& row = rows[static_cast<std::size_t>(k)];
    log.time[k] = row[0];
    log.y_desired[k] = row[1];
    log.y_actual[k] = row[2];
    log.alpha[k] = row[3];
    for (Eigen::Index j = 0; j < n; ++j) {
      log.variances(j, k) = row[4 + j];
      log.p_applied(j, k) = row[4 + n + j];
      log.p_ff(j, k) = row[4 + 2 * n + j];
      log.u(j, k) = row[4 + 3 * n + j];
    }
  }
  return log;
}

void save_stiffness_report(const std::string& path,
                           const StiffnessReport& report,
                           std::uint64_t fingerprint) {
  auto file = open_for_write(path);
  file << "# softctrl stiffness format_version=" << kFormatVersion << "\n";
  file << "fingerprint " << fingerprint_to_hex(fingerprint) << "\n";
  file << "probe_torque " << format_double(report.probe_torque) << "\n";
  file << "in_region_deflection "
       << format_double(report.in_region_deflection) << "\n";
  file << "out_region_deflection "
       << format_double(report.out_region_deflection) << "\n";
  file << "compliance_ratio "
       << (report.ratio_defined ? format_double(report.compliance_ratio)
                                : std::string("undefined"))
       << "\n";
  if (!file) {
    throw std::runtime_error("failed to write '" + path + "'");
  }
}

StiffnessReport load_stiffness_report(const std::string& path) {
  auto file = open_for_read(path);
  const std::string magic = next_line(file, path);
  const std::string prefix = "# softctrl stiffness format_version=";
  if (magic.rfind(prefix, 0) != 0) {
    throw MalformedFileError("'" + path +
                             "' is not a softctrl stiffness report");
  }
  const long long version =
      parse_integer(std::string_view(magic).substr(prefix.size()), path);
  if (version != kFormatVersion) {
    throw VersionMismatchError("'" + path + "' has format version " +
                               std::to_string(version));
  }
  expect_key(file, "fingerprint", path);

  StiffnessReport report;
  report.probe_torque =
      parse_double(expect_key(file, "probe_torque", path), path);
  report.in_region_deflection =
      parse_double(expect_key(file, "in_region_deflection", path), path);
  report.out_region_deflection =
      parse_double(expect_key(file, "out_region_deflection", path), path);
  const std::string ratio = expect_key(file, "compliance_ratio", path);
  if (ratio == "undefined") {
    report.ratio_defined = false;
  } else {
    report.compliance_ratio = parse_double(ratio, path);
    report.ratio_defined = true;
  }
  return report;
}

}  // namespace softctrl
