#include "silab/trace_io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "silab/errors.hpp"

namespace silab::io {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::array<char, 32> buf;
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

double parse_double(const std::string& s) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw IoError("bad numeric field: '" + s + "'");
    return v;
}

std::string trace_to_csv(const dynamics::Trajectory& traj) {
    std::string out = "step,loss,rho,grad_norm,eff_grad_norm,eff_lr,cos_dist,train_error\n";
    for (const auto& r : traj.records) {
        out += std::to_string(r.step);
        out += ',';
        out += format_double(r.loss);
        out += ',';
        out += format_double(r.rho);
        out += ',';
        out += format_double(r.grad_norm);
        out += ',';
        out += format_double(r.eff_grad_norm);
        out += ',';
        out += format_double(r.eff_lr);
        out += ',';
        out += format_double(r.cos_dist);
        out += ',';
        out += format_double(r.train_error);
        out += '\n';
    }
    return out;
}

void write_trace_csv(const std::filesystem::path& path, const dynamics::Trajectory& traj) {
    write_file(path, trace_to_csv(traj));
}

dynamics::Trajectory read_trace_csv(const std::filesystem::path& path, double eta,
                                    double lambda) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open trace: " + path.string());
    dynamics::Trajectory traj;
    traj.config.eta = eta > 0.0 ? eta : traj.config.eta;
    traj.config.lambda = lambda;
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty trace: " + path.string());
    if (line != "step,loss,rho,grad_norm,eff_grad_norm,eff_lr,cos_dist,train_error")
        throw IoError("unexpected trace header in " + path.string());
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::array<std::string, 8> fields;
        std::size_t field = 0, start = 0;
        for (std::size_t i = 0; i <= line.size(); ++i) {
            if (i == line.size() || line[i] == ',') {
                if (field >= fields.size()) throw IoError("too many fields in trace row");
                fields[field++] = line.substr(start, i - start);
                start = i + 1;
            }
        }
        if (field != fields.size()) throw IoError("short trace row");
        dynamics::TraceRecord r;
        r.step = static_cast<std::size_t>(std::stoull(fields[0]));
        r.loss = parse_double(fields[1]);
        r.rho = parse_double(fields[2]);
        r.grad_norm = parse_double(fields[3]);
        r.eff_grad_norm = parse_double(fields[4]);
        r.eff_lr = parse_double(fields[5]);
        r.cos_dist = parse_double(fields[6]);
        r.train_error = parse_double(fields[7]);
        traj.records.push_back(r);
    }
    if (!traj.records.empty()) traj.config.steps = traj.records.back().step + 1;
    return traj;
}

std::string overlay_to_csv(const jump::DeltaEnvelopes& env) {
    std::string out = "step,cos_dist,delta_min,delta_max\n";
    for (std::size_t i = 0; i < env.steps.size(); ++i) {
        out += std::to_string(env.steps[i]);
        out += ',';
        out += format_double(env.cos_dist[i]);
        out += ',';
        out += format_double(env.delta_min[i]);
        out += ',';
        out += format_double(env.delta_max[i]);
        out += '\n';
    }
    return out;
}

std::string similarity_to_csv(const std::vector<net::SimilarityRow>& rows) {
    std::string out = "step,cosine_sim,ensemble_err,single_err\n";
    for (const auto& r : rows) {
        out += std::to_string(r.step);
        out += ',';
        out += format_double(r.cosine_sim);
        out += ',';
        out += format_double(r.ensemble_err);
        out += ',';
        out += format_double(r.single_err);
        out += '\n';
    }
    return out;
}

void write_checkpoint(const std::filesystem::path& path, const dynamics::Checkpoint& ck,
                      const std::string& netspec_hash) {
    std::string out = "step " + std::to_string(ck.step) + "\n";
    out += "dim " + std::to_string(ck.x.size()) + "\n";
    if (!netspec_hash.empty()) out += "netspec " + netspec_hash + "\n";
    out += "test_error " + format_double(ck.test_error) + "\n";
    for (double v : ck.x) {
        out += format_double(v);
        out += '\n';
    }
    write_file(path, out);
}

dynamics::Checkpoint read_checkpoint(const std::filesystem::path& path,
                                     std::string* netspec_hash) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open checkpoint: " + path.string());
    dynamics::Checkpoint ck;
    std::size_t dim = 0;
    std::string key;
    while (in >> key) {
        if (key == "step") {
            in >> ck.step;
        } else if (key == "dim") {
            in >> dim;
        } else if (key == "netspec") {
            std::string h;
            in >> h;
            if (netspec_hash) *netspec_hash = h;
        } else if (key == "test_error") {
            std::string v;
            in >> v;
            ck.test_error = parse_double(v);
        } else {
            ck.x.push_back(parse_double(key));
            break;
        }
    }
    std::string v;
    while (in >> v) ck.x.push_back(parse_double(v));
    if (dim != ck.x.size()) throw IoError("checkpoint dimension mismatch in " + path.string());
    return ck;
}

// ---------------------------------------------------------------------------
// SHA-1 (FIPS 180-1), enough for content addressing of artifacts.

namespace {

struct Sha1 {
    std::uint32_t h[5] = {0x67452301u, 0xEFCDAB89u, 0x98BADCFEu, 0x10325476u, 0xC3D2E1F0u};
    std::uint64_t total = 0;
    unsigned char block[64];
    std::size_t fill = 0;

    static std::uint32_t rol(std::uint32_t v, int s) { return (v << s) | (v >> (32 - s)); }

    void process(const unsigned char* p) {
        std::uint32_t w[80];
        for (int i = 0; i < 16; ++i)
            w[i] = (std::uint32_t(p[4 * i]) << 24) | (std::uint32_t(p[4 * i + 1]) << 16) |
                   (std::uint32_t(p[4 * i + 2]) << 8) | std::uint32_t(p[4 * i + 3]);
        for (int i = 16; i < 80; ++i) w[i] = rol(w[i - 3] ^ w[i - 8] ^ w[i - 14] ^ w[i - 16], 1);
        std::uint32_t a = h[0], b = h[1], c = h[2], d = h[3], e = h[4];
        for (int i = 0; i < 80; ++i) {
            std::uint32_t f, k;
            if (i < 20) {
                f = (b & c) | ((~b) & d);
                k = 0x5A827999u;
            } else if (i < 40) {
                f = b ^ c ^ d;
                k = 0x6ED9EBA1u;
            } else if (i < 60) {
                f = (b & c) | (b & d) | (c & d);
                k = 0x8F1BBCDCu;
            } else {
                f = b ^ c ^ d;
                k = 0xCA62C1D6u;
            }
            const std::uint32_t tmp = rol(a, 5) + f + e + k + w[i];
            e = d;
            d = c;
            c = rol(b, 30);
            b = a;
            a = tmp;
        }
        h[0] += a;
        h[1] += b;
        h[2] += c;
        h[3] += d;
        h[4] += e;
    }

    void update(const void* data, std::size_t len) {
        const unsigned char* p = static_cast<const unsigned char*>(data);
        total += len;
        while (len > 0) {
            const std::size_t take = std::min(len, sizeof(block) - fill);
            std::memcpy(block + fill, p, take);
            fill += take;
            p += take;
            len -= take;
            if (fill == sizeof(block)) {
                process(block);
                fill = 0;
            }
        }
    }

    std::string hex() {
        const std::uint64_t bits = total * 8;
        const unsigned char one = 0x80;
        update(&one, 1);
        const unsigned char zero = 0;
        while (fill != 56) update(&zero, 1);
        unsigned char len8[8];
        for (int i = 0; i < 8; ++i) len8[i] = static_cast<unsigned char>(bits >> (56 - 8 * i));
        // update() would recount the length bytes; feed the final block directly
        std::memcpy(block + 56, len8, 8);
        process(block);
        static const char* digits = "0123456789abcdef";
        std::string out;
        out.reserve(40);
        for (std::uint32_t v : h)
            for (int i = 28; i >= 0; i -= 4) out += digits[(v >> i) & 0xf];
        return out;
    }
};

} // namespace

std::string git_blob_sha1(const std::string& bytes) {
    Sha1 sha;
    const std::string header = "blob " + std::to_string(bytes.size());
    sha.update(header.data(), header.size() + 1);  // includes the NUL
    sha.update(bytes.data(), bytes.size());
    return sha.hex();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace silab::io
