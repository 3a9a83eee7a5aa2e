#include "cil/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "cil/errors.hpp"
#include "cil/prng.hpp"

namespace cil {

static_assert(std::endian::native == std::endian::little, "CILD I/O assumes a little-endian host");

void Dataset::validate() const {
    for (const DataSplit* s : {&train, &test}) {
        if (s->features.rows() != s->labels.size()) throw ContractError("dataset: feature rows and labels differ");
        for (auto y : s->labels)
            if (y >= num_classes)
                throw ContractError("dataset: label " + std::to_string(y) + " outside [0, " +
                                    std::to_string(num_classes) + ")");
    }
    if (train.dim() != test.dim()) throw ContractError("dataset: train and test widths differ");
}

Dataset synth_dataset(const SynthSpec& spec) {
    if (spec.num_classes == 0 || spec.train_per_class == 0 || spec.test_per_class == 0 || spec.dim == 0)
        throw ContractError("synth_dataset: sizes must be positive");
    if (!(spec.spread > 0.0)) throw ContractError("synth_dataset: spread must be positive");
    Prng rng(spec.seed);
    std::vector<std::vector<double>> centers(spec.num_classes, std::vector<double>(spec.dim));
    for (auto& c : centers) {
        double norm = 0.0;
        for (auto& v : c) {
            v = rng.normal();
            norm += v * v;
        }
        norm = std::sqrt(norm);
        for (auto& v : c) v /= norm;
    }
    auto sample = [&](std::size_t per_class) {
        const std::size_t n = per_class * spec.num_classes;
        DataSplit s{Tensor({n, spec.dim}), std::vector<std::size_t>(n)};
        std::size_t r = 0;
        for (std::size_t c = 0; c < spec.num_classes; ++c) {
            for (std::size_t i = 0; i < per_class; ++i, ++r) {
                for (std::size_t j = 0; j < spec.dim; ++j)
                    s.features(r, j) = static_cast<float>(centers[c][j] + spec.spread * rng.normal());
                s.labels[r] = c;
            }
        }
        return s;
    };
    Dataset d;
    d.num_classes = spec.num_classes;
    d.train = sample(spec.train_per_class);
    d.test = sample(spec.test_per_class);
    return d;
}

namespace {

template <typename T>
void put(std::string& out, T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out.append(buf, sizeof(T));
}

template <typename T>
T get(const std::vector<std::uint8_t>& bytes, std::size_t& off, const char* field) {
    if (off > bytes.size() || bytes.size() - off < sizeof(T))
        throw ParseError(std::string("CILD: truncated while reading ") + field, off);
    T v;
    std::memcpy(&v, bytes.data() + off, sizeof(T));
    off += sizeof(T);
    return v;
}

std::vector<std::uint8_t> read_all(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ContractError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

LoadedSplit parse_csv(const std::vector<std::uint8_t>& bytes) {
    std::string text(bytes.begin(), bytes.end());
    std::istringstream in(text);
    std::string line;
    std::size_t offset = 0;
    if (!std::getline(in, line)) throw ParseError("CSV: empty file", 0);
    auto split_fields = [](const std::string& l) {
        std::vector<std::string> f;
        std::string cur;
        std::istringstream ls(l);
        while (std::getline(ls, cur, ',')) f.push_back(cur);
        return f;
    };
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split_fields(line);
    if (header.size() < 2 || header[0] != "label") throw ParseError("CSV: header must be label,f0,f1,...", 0);
    for (std::size_t j = 1; j < header.size(); ++j)
        if (header[j] != "f" + std::to_string(j - 1)) throw ParseError("CSV: unexpected column '" + header[j] + "'", 0);
    const std::size_t dim = header.size() - 1;
    offset += line.size() + 1;
    std::vector<double> values;
    std::vector<std::size_t> labels;
    while (std::getline(in, line)) {
        const std::size_t line_len = line.size() + 1;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) {
            offset += line_len;
            continue;
        }
        const auto f = split_fields(line);
        if (f.size() != dim + 1)
            throw ParseError("CSV: row has " + std::to_string(f.size()) + " fields, expected " +
                                 std::to_string(dim + 1),
                             offset);
        try {
            std::size_t pos = 0;
            const long long y = std::stoll(f[0], &pos);
            if (pos != f[0].size() || y < 0) throw std::invalid_argument("label");
            labels.push_back(static_cast<std::size_t>(y));
            for (std::size_t j = 1; j <= dim; ++j) {
                const double v = std::stod(f[j], &pos);
                if (pos != f[j].size() || !std::isfinite(v)) throw std::invalid_argument("value");
                values.push_back(v);
            }
        } catch (const std::logic_error&) {
            throw ParseError("CSV: malformed number", offset);
        }
        offset += line_len;
    }
    if (labels.empty()) throw ParseError("CSV: no data rows", offset);
    LoadedSplit out;
    out.split.features = Tensor({labels.size(), dim}, std::move(values));
    out.split.labels = std::move(labels);
    out.num_classes = *std::max_element(out.split.labels.begin(), out.split.labels.end()) + 1;
    return out;
}

}  // namespace

void write_cild(const std::filesystem::path& path, const DataSplit& split, std::size_t num_classes) {
    if (num_classes > 65536) throw ContractError("CILD: labels are u16, too many classes");
    std::string out = "CILD";
    put<std::uint16_t>(out, kCildVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(split.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(split.dim()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(num_classes));
    for (double v : split.features.data()) put<float>(out, static_cast<float>(v));
    for (auto y : split.labels) {
        if (y >= num_classes) throw ContractError("CILD: label exceeds class count");
        put<std::uint16_t>(out, static_cast<std::uint16_t>(y));
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ContractError("cannot write " + path.string());
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

void write_csv(const std::filesystem::path& path, const DataSplit& split) {
    std::ofstream f(path);
    if (!f) throw ContractError("cannot write " + path.string());
    f << "label";
    for (std::size_t j = 0; j < split.dim(); ++j) f << ",f" << j;
    f << '\n';
    f.precision(17);
    for (std::size_t i = 0; i < split.size(); ++i) {
        f << split.labels[i];
        for (double v : split.features.row(i)) f << ',' << v;
        f << '\n';
    }
}

LoadedSplit parse_cild(const std::vector<std::uint8_t>& bytes) {
    std::size_t off = 0;
    if (bytes.size() < 4 || std::memcmp(bytes.data(), "CILD", 4) != 0) throw ParseError("CILD: bad magic", 0);
    off = 4;
    const auto version = get<std::uint16_t>(bytes, off, "version");
    if (version != kCildVersion)
        throw ParseError("CILD: unsupported version " + std::to_string(version), 4);
    const auto n = get<std::uint32_t>(bytes, off, "n_samples");
    const auto dim = get<std::uint32_t>(bytes, off, "feature_dim");
    const auto classes = get<std::uint32_t>(bytes, off, "n_classes");
    if (n == 0 || dim == 0 || classes == 0) throw ParseError("CILD: header sizes must be positive", 6);
    const std::uint64_t need = kCildHeaderBytes + std::uint64_t{n} * dim * 4 + std::uint64_t{n} * 2;
    if (bytes.size() < need)
        throw ParseError("CILD: truncated payload, expected " + std::to_string(need) + " bytes, have " +
                             std::to_string(bytes.size()),
                         bytes.size());
    if (bytes.size() > need) throw ParseError("CILD: trailing bytes after labels", need);
    std::vector<double> values(std::size_t{n} * dim);
    for (auto& v : values) {
        const auto fv = get<float>(bytes, off, "features");
        if (!std::isfinite(fv)) throw ParseError("CILD: non-finite feature value", off - 4);
        v = fv;
    }
    LoadedSplit out;
    out.split.labels.resize(n);
    for (auto& y : out.split.labels) {
        y = get<std::uint16_t>(bytes, off, "labels");
        if (y >= classes)
            throw ParseError("CILD: label " + std::to_string(y) + " outside [0, " + std::to_string(classes) + ")",
                             off - 2);
    }
    out.split.features = Tensor({n, dim}, std::move(values));
    out.num_classes = classes;
    return out;
}

LoadedSplit load_split(const std::filesystem::path& path) {
    const auto bytes = read_all(path);
    const bool cild_magic = bytes.size() >= 4 && std::memcmp(bytes.data(), "CILD", 4) == 0;
    if (!cild_magic && path.extension() == ".csv") return parse_csv(bytes);
    return parse_cild(bytes);
}

Dataset load_dataset(const std::filesystem::path& train, const std::filesystem::path& test) {
    auto tr = load_split(train);
    auto te = load_split(test);
    Dataset d;
    d.num_classes = std::max(tr.num_classes, te.num_classes);
    d.train = std::move(tr.split);
    d.test = std::move(te.split);
    d.validate();
    return d;
}

}  // namespace cil
