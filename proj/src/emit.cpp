#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "markovpca/error.hpp"
#include "markovpca/harness.hpp"

namespace markovpca {

namespace {

constexpr std::string_view kCsvHeader =
    "trial_id\talgorithm\tcheckpoint_n\tsin2_error\tseed";

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return out;
}

template <typename T>
T parse_field(std::string_view v, std::size_t line_no) {
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    fail(ErrorCode::Io, "malformed CSV field '" + std::string(v) + "' on line " +
                            std::to_string(line_no));
  }
  return out;
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out << body;
  out.flush();
  if (!out) fail(ErrorCode::Io, "failed writing " + path.string());
}

}  // namespace

std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

std::string to_csv(const ResultTable& t) {
  std::string out(kCsvHeader);
  out += '\n';
  for (const auto& r : t.rows) {
    out += std::to_string(r.trial_id);
    out += '\t';
    out += r.algorithm;
    out += '\t';
    out += std::to_string(r.checkpoint_n);
    out += '\t';
    out += format_double(r.sin2_error);
    out += '\t';
    out += std::to_string(r.seed);
    out += '\n';
  }
  return out;
}

ResultTable parse_csv(std::string_view text) {
  ResultTable t;
  std::size_t start = 0;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const auto line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!header_seen) {
      if (line != kCsvHeader) fail(ErrorCode::Io, "unexpected CSV header");
      header_seen = true;
      continue;
    }
    if (line.empty()) continue;
    const auto f = split_tabs(line);
    if (f.size() != 5) {
      fail(ErrorCode::Io, "expected 5 fields on line " + std::to_string(line_no));
    }
    ResultRow r;
    r.trial_id = parse_field<std::size_t>(f[0], line_no);
    r.algorithm = std::string(f[1]);
    r.checkpoint_n = parse_field<std::size_t>(f[2], line_no);
    r.sin2_error = parse_field<double>(f[3], line_no);
    r.seed = parse_field<std::uint64_t>(f[4], line_no);
    t.rows.push_back(std::move(r));
  }
  if (!header_seen) fail(ErrorCode::Io, "empty CSV");
  return t;
}

ResultTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str());
}

std::string to_svg(const ResultTable& t, std::string_view title) {
  require(!t.rows.empty(), "cannot plot an empty table");
  const auto curves = aggregate(t);
  constexpr double kW = 640, kH = 440, kLeft = 80, kRight = 150, kTop = 40,
                   kBottom = 60;
  constexpr double kFloor = 1e-16;

  double xmin = 1e300, xmax = 0, ymin = 1e300, ymax = 0;
  for (const auto& [algo, pts] : curves) {
    for (const auto& p : pts) {
      xmin = std::min(xmin, static_cast<double>(p.n));
      xmax = std::max(xmax, static_cast<double>(p.n));
      ymin = std::min(ymin, std::max(p.mean, kFloor));
      ymax = std::max(ymax, std::max(p.mean, kFloor));
    }
  }
  const double lx0 = std::floor(std::log10(xmin));
  const double lx1 = std::max(std::ceil(std::log10(xmax)), lx0 + 1);
  const double ly0 = std::floor(std::log10(ymin));
  const double ly1 = std::max(std::ceil(std::log10(ymax)), ly0 + 1);
  const double pw = kW - kLeft - kRight;
  const double ph = kH - kTop - kBottom;
  auto px = [&](double n) { return kLeft + (std::log10(n) - lx0) / (lx1 - lx0) * pw; };
  auto py = [&](double e) {
    return kTop + (ly1 - std::log10(std::max(e, kFloor))) / (ly1 - ly0) * ph;
  };

  static constexpr std::array<const char*, 6> kColors{
      "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
  std::ostringstream os;
  os.precision(6);
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW
     << "\" height=\"" << kH << "\" viewBox=\"0 0 " << kW << ' ' << kH << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!title.empty()) {
    os << "<text x=\"" << kLeft + pw / 2 << "\" y=\"24\" text-anchor=\"middle\""
       << " font-size=\"15\">" << xml_escape(title) << "</text>\n";
  }
  os << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw
     << "\" height=\"" << ph << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double e = lx0; e <= lx1; e += 1) {
    const double x = kLeft + (e - lx0) / (lx1 - lx0) * pw;
    os << "<line x1=\"" << x << "\" y1=\"" << kTop + ph << "\" x2=\"" << x
       << "\" y2=\"" << kTop + ph + 5 << "\" stroke=\"black\"/>\n"
       << "<text x=\"" << x << "\" y=\"" << kTop + ph + 20
       << "\" text-anchor=\"middle\" font-size=\"12\">1e" << e << "</text>\n";
  }
  for (double e = ly0; e <= ly1; e += 1) {
    const double y = kTop + (ly1 - e) / (ly1 - ly0) * ph;
    os << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << y << "\" x2=\"" << kLeft
       << "\" y2=\"" << y << "\" stroke=\"black\"/>\n"
       << "<text x=\"" << kLeft - 8 << "\" y=\"" << y + 4
       << "\" text-anchor=\"end\" font-size=\"12\">1e" << e << "</text>\n";
  }
  os << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kH - 15
     << "\" text-anchor=\"middle\" font-size=\"13\">samples n</text>\n"
     << "<text x=\"20\" y=\"" << kTop + ph / 2
     << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 20 "
     << kTop + ph / 2 << ")\">mean sin^2 error</text>\n";

  std::size_t idx = 0;
  for (const auto& [algo, pts] : curves) {
    const char* color = kColors[idx % kColors.size()];
    os << "<polyline fill=\"none\" stroke=\"" << color
       << "\" stroke-width=\"2\" data-algorithm=\"" << xml_escape(algo)
       << "\" points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) {
      os << (i ? " " : "") << px(static_cast<double>(pts[i].n)) << ','
         << py(pts[i].mean);
    }
    os << "\"/>\n";
    const double ly = kTop + 20 + 20 * static_cast<double>(idx);
    os << "<line x1=\"" << kW - kRight + 10 << "\" y1=\"" << ly << "\" x2=\""
       << kW - kRight + 35 << "\" y2=\"" << ly << "\" stroke=\"" << color
       << "\" stroke-width=\"2\"/>\n"
       << "<text x=\"" << kW - kRight + 40 << "\" y=\"" << ly + 4
       << "\" font-size=\"12\">" << xml_escape(algo) << "</text>\n";
    ++idx;
  }
  os << "</svg>\n";
  return os.str();
}

std::string summary_tsv(const ResultTable& t) {
  std::string out = "algorithm\tcheckpoint_n\tmean_sin2\tmedian_sin2\n";
  for (const auto& [algo, pts] : aggregate(t)) {
    for (const auto& p : pts) {
      out += algo + '\t' + std::to_string(p.n) + '\t' + format_double(p.mean) +
             '\t' + format_double(p.median) + '\n';
    }
  }
  return out;
}

std::string metadata_tsv(const ResultTable& t) {
  const auto& m = t.meta;
  std::ostringstream os;
  auto kv = [&](std::string_view k, const std::string& v) {
    os << k << '\t' << v << '\n';
  };
  kv("rho", format_double(m.rho));
  kv("sigma_beta", format_double(m.sigma_beta));
  kv("bernoulli_p", format_double(m.bernoulli_p));
  kv("bernoulli_p_scope", "shared across states and coordinates");
  kv("lambda1", format_double(m.lambda1));
  kv("lambda2", format_double(m.lambda2));
  kv("gap", format_double(m.gap));
  kv("chain_lambda2_abs", format_double(m.chain_lambda2_abs));
  kv("tau_mix", std::to_string(m.tau_mix));
  kv("schedule_mode", to_string(m.schedule.mode));
  kv("alpha", format_double(m.schedule.alpha));
  kv("beta", format_double(m.schedule.beta));
  kv("eta0", format_double(m.schedule.eta0()));
  kv("eta0_above_one", m.schedule.eta0_above_one() ? "true" : "false");
  kv("downsample_k", std::to_string(m.downsample_k));
  kv("downsampled_beta", format_double(m.downsampled_schedule.beta));
  for (std::size_t i = 0; i < m.stream_checksums.size(); ++i) {
    kv("stream_checksum_" + std::to_string(i),
       std::to_string(m.stream_checksums[i]));
  }
  return os.str();
}

void emit(const ResultTable& t, EmitFormat format,
          const std::filesystem::path& path) {
  require(!t.rows.empty(), "cannot emit an empty table");
  write_file(path, format == EmitFormat::Csv ? to_csv(t) : to_svg(t));
}

}  // namespace markovpca
