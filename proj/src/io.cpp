#include "capimg/io.hpp"

#include "capimg/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace capimg::io {

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    out << text;
    if (!out) throw IoError("write failed for " + path);
}

namespace {

std::string trim(std::string_view s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return std::string(s.substr(a, b - a));
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t k = 0; k <= s.size(); ++k) {
        if (k == s.size() || s[k] == sep) {
            out.emplace_back(s.substr(start, k - start));
            start = k + 1;
        }
    }
    return out;
}

bool parse_number(const std::string& text, double& out) {
    const std::string t = trim(text);
    if (t.empty()) return false;
    const char* first = t.data();
    const char* last = t.data() + t.size();
    if (*first == '+') ++first;
    const auto res = std::from_chars(first, last, out);
    return res.ec == std::errc() && res.ptr == last;
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

}  // namespace

std::string image_csv_text(const ScanImage& img) {
    std::string s;
    s += "# channel=";
    s += channel_name(img.channel);
    s += "\n# nx=" + std::to_string(img.nx) + ",ny=" + std::to_string(img.ny) + ",dx=" +
         format_double(img.meta.dx) + ",dy=" + format_double(img.meta.dy) + ",units=" + img.meta.units +
         ",x0=" + format_double(img.meta.x0) + ",y0=" + format_double(img.meta.y0) + "\n";
    for (std::size_t j = 0; j < img.ny; ++j) {
        for (std::size_t i = 0; i < img.nx; ++i) {
            if (i) s += ',';
            s += format_double(img.at(j, i));
        }
        s += '\n';
    }
    return s;
}

void write_image_csv(const ScanImage& img, const std::string& path) { write_text(path, image_csv_text(img)); }

ImageCsv parse_image_csv(const std::string& text, const std::string& source) {
    ImageCsv out;
    auto& img = out.image;
    img.meta = ImageMeta{};
    std::map<std::string, std::string> header;
    std::vector<std::vector<double>> rows;
    const auto lines = lines_of(text);
    std::size_t expected_cols = 0;
    for (std::size_t ln = 0; ln < lines.size(); ++ln) {
        const std::string line = trim(lines[ln]);
        if (line.empty()) continue;
        if (line[0] == '#') {
            for (const auto& kv : split(std::string_view(line).substr(1), ',')) {
                const auto eq = kv.find('=');
                if (eq == std::string::npos) continue;
                header[trim(std::string_view(kv).substr(0, eq))] = trim(std::string_view(kv).substr(eq + 1));
            }
            continue;
        }
        const auto cells = split(line, ',');
        std::vector<double> row(cells.size());
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (!parse_number(cells[c], row[c])) {
                throw ParseError(ln + 1, c + 1,
                                 source + ": non-numeric cell '" + trim(cells[c]) + "' at row " +
                                     std::to_string(ln + 1) + ", col " + std::to_string(c + 1));
            }
        }
        if (rows.empty()) {
            expected_cols = row.size();
        } else if (row.size() != expected_cols) {
            throw ParseError(ln + 1, row.size(),
                             source + ": row " + std::to_string(ln + 1) + " has " + std::to_string(row.size()) +
                                 " values, expected " + std::to_string(expected_cols));
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError(0, 0, source + ": no data rows");

    img.ny = rows.size();
    img.nx = expected_cols;
    img.values.reserve(img.nx * img.ny);
    for (const auto& r : rows) img.values.insert(img.values.end(), r.begin(), r.end());

    img.channel = Channel::R;
    if (auto it = header.find("channel"); it != header.end()) {
        if (auto c = parse_channel(it->second)) {
            img.channel = *c;
        } else {
            out.warnings.push_back(source + ": unknown channel '" + it->second + "'");
        }
    } else {
        out.warnings.push_back(source + ": no channel header");
    }
    auto number = [&](const char* key, double& dst, double fallback) {
        auto it = header.find(key);
        if (it == header.end()) {
            dst = fallback;
            out.warnings.push_back(source + ": missing " + key + ", using " + format_double(fallback));
            return;
        }
        if (!parse_number(it->second, dst)) throw ParseError(0, 0, source + ": bad header value for " + key);
    };
    number("dx", img.meta.dx, 1.0);
    number("dy", img.meta.dy, 1.0);
    if (auto it = header.find("units"); it != header.end()) {
        img.meta.units = it->second;
    } else {
        img.meta.units = "arb";
        out.warnings.push_back(source + ": missing units, using arb");
    }
    // Origins are an optional extension of the header.
    if (auto it = header.find("x0"); it != header.end()) parse_number(it->second, img.meta.x0);
    if (auto it = header.find("y0"); it != header.end()) parse_number(it->second, img.meta.y0);
    for (const char* key : {"nx", "ny"}) {
        auto it = header.find(key);
        if (it == header.end()) continue;
        double v = 0;
        const std::size_t actual = key[1] == 'x' ? img.nx : img.ny;
        if (!parse_number(it->second, v) || static_cast<std::size_t>(v) != actual) {
            throw ParseError(0, 0, source + ": header " + key + "=" + it->second + " disagrees with data (" +
                                       std::to_string(actual) + ")");
        }
    }
    return out;
}

ImageCsv read_image_csv(const std::string& path) { return parse_image_csv(read_text(path), path); }

void write_timeseries_csv(const TimeSeries& ts, const std::string& path) {
    std::string s = "t,v\n";
    for (std::size_t n = 0; n < ts.samples.size(); ++n) {
        s += format_double(ts.time(n));
        s += ',';
        s += format_double(ts.samples[n]);
        s += '\n';
    }
    write_text(path, s);
}

TimeSeries read_timeseries_csv(const std::string& path) {
    const auto lines = lines_of(read_text(path));
    std::vector<double> t, v;
    for (std::size_t ln = 0; ln < lines.size(); ++ln) {
        const std::string line = trim(lines[ln]);
        if (line.empty() || line[0] == '#') continue;
        const auto cells = split(line, ',');
        double a = 0, b = 0;
        if (cells.size() != 2 || !parse_number(cells[0], a) || !parse_number(cells[1], b)) {
            if (t.empty() && v.empty() && ln == 0) continue;  // header row
            throw ParseError(ln + 1, 1, path + ": expected two numeric columns at row " + std::to_string(ln + 1));
        }
        t.push_back(a);
        v.push_back(b);
    }
    if (t.size() < 2) throw ParseError(0, 0, path + ": need at least two samples");
    TimeSeries ts;
    ts.t0 = t.front();
    ts.fs = static_cast<double>(t.size() - 1) / (t.back() - t.front());
    const double step = 1.0 / ts.fs;
    for (std::size_t n = 1; n < t.size(); ++n) {
        if (std::abs((t[n] - t[n - 1]) - step) > 1e-6 * step) {
            throw ParseError(n + 2, 1, path + ": non-uniform sampling at row " + std::to_string(n + 2));
        }
    }
    ts.samples = std::move(v);
    return ts;
}

void write_volume_csv(const std::string& path, const std::string& name, std::size_t nx, std::size_t ny,
                      std::size_t nz, double h, std::span<const double> values) {
    if (values.size() != nx * ny * nz) throw DimensionError("volume size does not match nx*ny*nz");
    std::string s = "# volume=" + name + "\n# nx=" + std::to_string(nx) + ",ny=" + std::to_string(ny) +
                    ",nz=" + std::to_string(nz) + ",h=" + format_double(h) + "\n";
    for (std::size_t k = 0; k < nz; ++k) {
        s += "# k=" + std::to_string(k) + "\n";
        for (std::size_t j = 0; j < ny; ++j) {
            for (std::size_t i = 0; i < nx; ++i) {
                if (i) s += ',';
                s += format_double(values[(k * ny + j) * nx + i]);
            }
            s += '\n';
        }
    }
    write_text(path, s);
}

std::vector<std::uint8_t> pgm_bytes(const ScanImage& img, int bit_depth, std::string* warning) {
    if (bit_depth != 8 && bit_depth != 16) throw Error("pgm", "bit depth must be 8 or 16");
    if (img.values.empty()) throw DimensionError("cannot export an empty image");
    for (double v : img.values) {
        if (!std::isfinite(v)) throw Error("pgm", "image contains non-finite values");
    }
    const unsigned maxval = bit_depth == 8 ? 255u : 65535u;
    const auto [lo_it, hi_it] = std::minmax_element(img.values.begin(), img.values.end());
    const double lo = *lo_it, range = *hi_it - *lo_it;
    if (!(range > 0.0) && warning != nullptr) {
        *warning = "constant image exported as all-zero pixels";
    }

    const std::string header =
        "P5\n" + std::to_string(img.nx) + " " + std::to_string(img.ny) + "\n" + std::to_string(maxval) + "\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.reserve(header.size() + img.size() * (bit_depth / 8));
    for (double v : img.values) {
        unsigned level = 0;
        if (range > 0.0) {
            const double t = (v - lo) / range;
            level = static_cast<unsigned>(std::lround(std::clamp(t, 0.0, 1.0) * maxval));
        }
        if (bit_depth == 16) out.push_back(static_cast<std::uint8_t>(level >> 8));
        out.push_back(static_cast<std::uint8_t>(level & 0xffu));
    }
    return out;
}

std::string export_pgm(const ScanImage& img, const std::string& path, int bit_depth) {
    std::string warning;
    const auto bytes = pgm_bytes(img, bit_depth, &warning);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + path);
    return warning;
}

}  // namespace capimg::io
