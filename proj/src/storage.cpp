#include "examkit/storage.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "examkit/errors.hpp"

namespace examkit {
namespace {

constexpr char kMagic[8] = {'E', 'X', 'K', 'D', 'R', 'W', '0', '1'};

std::string chain_file_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "chain_%02zu.csv", index + 1);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  fields.push_back(cur);
  return fields;
}

void write_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void write_u64(std::ostream& os, std::uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void write_f64(std::ostream& os, double v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void write_str(std::ostream& os, const std::string& s) {
  write_u32(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint32_t read_u32(std::istream& is) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  require(bool(is), ErrorCode::Io, "truncated draws file");
  return v;
}
std::uint64_t read_u64(std::istream& is) {
  std::uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  require(bool(is), ErrorCode::Io, "truncated draws file");
  return v;
}
double read_f64(std::istream& is) {
  double v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  require(bool(is), ErrorCode::Io, "truncated draws file");
  return v;
}
std::string read_str(std::istream& is) {
  std::uint32_t n = read_u32(is);
  require(n <= (1u << 24), ErrorCode::Io, "corrupt string length in draws file");
  std::string s(n, '\0');
  is.read(s.data(), n);
  require(bool(is), ErrorCode::Io, "truncated draws file");
  return s;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void save_draws_csv(const PosteriorDraws& draws, const std::filesystem::path& dir) {
  require(!draws.parameter_names.empty(), ErrorCode::InvalidArgument,
          "draws object has no parameters");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  require(!ec, ErrorCode::Io, "cannot create directory " + dir.string());

  std::size_t np = draws.n_parameters();
  for (std::size_t c = 0; c < draws.n_chains(); ++c) {
    auto path = dir / chain_file_name(c);
    std::ofstream os(path);
    require(bool(os), ErrorCode::Io, "cannot open " + path.string());
    for (std::size_t p = 0; p < np; ++p) {
      if (p) os << ',';
      os << draws.parameter_names[p];
    }
    os << '\n';
    std::size_t rows = draws.n_iterations();
    for (std::size_t it = 0; it < rows; ++it) {
      for (std::size_t p = 0; p < np; ++p) {
        if (p) os << ',';
        os << format_double(draws.value(c, it, p));
      }
      os << '\n';
    }
    os.flush();
    require(bool(os), ErrorCode::Io, "write failed for " + path.string());
  }
}

PosteriorDraws load_draws_csv(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  std::error_code ec;
  for (auto it = std::filesystem::directory_iterator(dir, ec);
       !ec && it != std::filesystem::directory_iterator(); ++it) {
    const auto& p = it->path();
    auto name = p.filename().string();
    if (name.rfind("chain_", 0) == 0 && p.extension() == ".csv")
      files.push_back(p);
  }
  require(!ec, ErrorCode::Io, "cannot list directory " + dir.string());
  require(!files.empty(), ErrorCode::Io,
          "no chain_*.csv files in " + dir.string());
  std::sort(files.begin(), files.end());

  PosteriorDraws out;
  for (std::size_t c = 0; c < files.size(); ++c) {
    std::ifstream is(files[c]);
    require(bool(is), ErrorCode::Io, "cannot open " + files[c].string());
    std::string line;
    require(bool(std::getline(is, line)), ErrorCode::Io,
            "empty draws file " + files[c].string());
    auto header = split_csv_line(line);
    if (c == 0) {
      out.parameter_names = header;
    } else {
      require(header == out.parameter_names, ErrorCode::DataIntegrity,
              "chain files disagree on parameter names");
    }
    std::vector<double> flat;
    std::size_t rows = 0;
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      auto fields = split_csv_line(line);
      require(fields.size() == header.size(), ErrorCode::Parse,
              "row width mismatch in " + files[c].string());
      for (const auto& f : fields) {
        char* end = nullptr;
        double v = std::strtod(f.c_str(), &end);
        require(end && *end == '\0' && end != f.c_str(), ErrorCode::Parse,
                "bad numeric field '" + f + "' in " + files[c].string());
        flat.push_back(v);
      }
      ++rows;
    }
    require(rows > 0, ErrorCode::Io, "no draws in " + files[c].string());
    if (c > 0)
      require(flat.size() == out.draws.front().size(), ErrorCode::DataIntegrity,
              "chain files disagree on iteration count");
    out.draws.push_back(std::move(flat));
  }
  out.chain_stats.assign(out.draws.size(), ChainStats{});
  out.config.n_chains = static_cast<int>(out.draws.size());
  return out;
}

void save_draws_binary(const PosteriorDraws& draws,
                       const std::filesystem::path& file) {
  std::ofstream os(file, std::ios::binary);
  require(bool(os), ErrorCode::Io, "cannot open " + file.string());
  os.write(kMagic, sizeof kMagic);
  write_u32(os, static_cast<std::uint32_t>(draws.n_chains()));
  write_u32(os, static_cast<std::uint32_t>(draws.n_iterations()));
  write_u32(os, static_cast<std::uint32_t>(draws.n_parameters()));

  const SamplerConfig& c = draws.config;
  write_u32(os, static_cast<std::uint32_t>(c.n_chains));
  write_u32(os, static_cast<std::uint32_t>(c.n_warmup));
  write_u32(os, static_cast<std::uint32_t>(c.n_samples));
  write_u64(os, c.seed);
  write_f64(os, c.target_accept);
  write_u32(os, static_cast<std::uint32_t>(c.max_leapfrog_steps));
  write_u32(os, c.algorithm == SamplerConfig::Algorithm::Nuts ? 0u : 1u);
  write_u32(os,
            c.parameterization == SamplerConfig::Parameterization::NonCentered
                ? 0u
                : 1u);

  for (const auto& name : draws.parameter_names) write_str(os, name);
  for (const auto& s : draws.chain_stats) {
    write_u32(os, static_cast<std::uint32_t>(s.divergences));
    write_f64(os, s.divergence_rate);
    write_f64(os, s.mean_accept);
    write_f64(os, s.step_size);
    write_u32(os, static_cast<std::uint32_t>(s.max_depth_hits));
  }
  for (const auto& chain : draws.draws)
    os.write(reinterpret_cast<const char*>(chain.data()),
             static_cast<std::streamsize>(chain.size() * sizeof(double)));
  write_u32(os, static_cast<std::uint32_t>(draws.warnings.size()));
  for (const auto& w : draws.warnings) write_str(os, w);
  os.flush();
  require(bool(os), ErrorCode::Io, "write failed for " + file.string());
}

PosteriorDraws load_draws_binary(const std::filesystem::path& file) {
  std::ifstream is(file, std::ios::binary);
  require(bool(is), ErrorCode::Io, "cannot open " + file.string());
  char magic[8];
  is.read(magic, sizeof magic);
  require(bool(is) && std::memcmp(magic, kMagic, sizeof kMagic) == 0,
          ErrorCode::Parse, "not a draws file: " + file.string());

  std::uint32_t n_chains = read_u32(is);
  std::uint32_t n_iter = read_u32(is);
  std::uint32_t n_params = read_u32(is);
  require(n_chains > 0 && n_params > 0 && n_chains < (1u << 16) &&
              n_params < (1u << 24),
          ErrorCode::Parse, "corrupt draws header");

  PosteriorDraws out;
  out.config.n_chains = static_cast<int>(read_u32(is));
  out.config.n_warmup = static_cast<int>(read_u32(is));
  out.config.n_samples = static_cast<int>(read_u32(is));
  out.config.seed = read_u64(is);
  out.config.target_accept = read_f64(is);
  out.config.max_leapfrog_steps = static_cast<int>(read_u32(is));
  out.config.algorithm = read_u32(is) == 0 ? SamplerConfig::Algorithm::Nuts
                                           : SamplerConfig::Algorithm::RandomWalk;
  out.config.parameterization =
      read_u32(is) == 0 ? SamplerConfig::Parameterization::NonCentered
                        : SamplerConfig::Parameterization::Centered;

  out.parameter_names.reserve(n_params);
  for (std::uint32_t p = 0; p < n_params; ++p)
    out.parameter_names.push_back(read_str(is));
  out.chain_stats.resize(n_chains);
  for (auto& s : out.chain_stats) {
    s.divergences = static_cast<int>(read_u32(is));
    s.divergence_rate = read_f64(is);
    s.mean_accept = read_f64(is);
    s.step_size = read_f64(is);
    s.max_depth_hits = static_cast<int>(read_u32(is));
  }
  std::size_t per_chain = static_cast<std::size_t>(n_iter) * n_params;
  out.draws.assign(n_chains, std::vector<double>(per_chain));
  for (auto& chain : out.draws) {
    is.read(reinterpret_cast<char*>(chain.data()),
            static_cast<std::streamsize>(per_chain * sizeof(double)));
    require(bool(is), ErrorCode::Io, "truncated draws file");
  }
  std::uint32_t n_warn = read_u32(is);
  require(n_warn < (1u << 16), ErrorCode::Parse, "corrupt warning count");
  for (std::uint32_t w = 0; w < n_warn; ++w)
    out.warnings.push_back(read_str(is));
  return out;
}

}  // namespace examkit
