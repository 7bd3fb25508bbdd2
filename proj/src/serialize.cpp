#include "eirc/serialize.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace eirc {

namespace {

constexpr char kMagic[8] = {'E', 'I', 'R', 'C', 'D', 'U', 'M', 'P'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kFlagReadout = 1u;

template <typename T>
void put(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) throw std::runtime_error("load_reservoir: truncated file");
    return v;
}

void put_vector(std::ostream& out, const Eigen::VectorXd& v) {
    put<std::int64_t>(out, v.size());
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
}

Eigen::VectorXd get_vector(std::istream& in) {
    const auto size = get<std::int64_t>(in);
    if (size < 0) throw std::runtime_error("load_reservoir: negative vector size");
    Eigen::VectorXd v(size);
    in.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(size * sizeof(double)));
    if (!in) throw std::runtime_error("load_reservoir: truncated file");
    return v;
}

void put_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
    put<std::int64_t>(out, m.rows());
    put<std::int64_t>(out, m.cols());
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(m.size() * sizeof(double)));
}

Eigen::MatrixXd get_matrix(std::istream& in) {
    const auto rows = get<std::int64_t>(in);
    const auto cols = get<std::int64_t>(in);
    if (rows < 0 || cols < 0) throw std::runtime_error("load_reservoir: negative matrix size");
    Eigen::MatrixXd m(rows, cols);
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (!in) throw std::runtime_error("load_reservoir: truncated file");
    return m;
}

void put_links(std::ostream& out, const std::vector<std::vector<std::int32_t>>& links) {
    put<std::int64_t>(out, static_cast<std::int64_t>(links.size()));
    for (const auto& row : links) {
        put<std::uint32_t>(out, static_cast<std::uint32_t>(row.size()));
        out.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(row.size() * sizeof(std::int32_t)));
    }
}

std::vector<std::vector<std::int32_t>> get_links(std::istream& in) {
    const auto n = get<std::int64_t>(in);
    if (n < 0) throw std::runtime_error("load_reservoir: negative link table size");
    std::vector<std::vector<std::int32_t>> links(static_cast<std::size_t>(n));
    for (auto& row : links) {
        const auto count = get<std::uint32_t>(in);
        row.resize(count);
        in.read(reinterpret_cast<char*>(row.data()),
                static_cast<std::streamsize>(count * sizeof(std::int32_t)));
        if (!in) throw std::runtime_error("load_reservoir: truncated file");
    }
    return links;
}

void put_config(std::ostream& out, const NetworkConfig& c) {
    put<std::int32_t>(out, c.n_neurons);
    put(out, c.excit_fraction);
    put(out, c.mean_degree);
    put(out, c.mu_e);
    put(out, c.sigma_e);
    put(out, c.beta);
    put(out, c.sigma_i);
    put(out, c.alpha);
    put(out, c.theta);
    put(out, c.steepness);
    put(out, c.leakage);
    put(out, c.input_fraction);
    put(out, c.input_spread);
    put(out, c.strength_ratio);
    put<std::uint8_t>(out, static_cast<std::uint8_t>(c.balance_mode));
    put<std::uint8_t>(out, static_cast<std::uint8_t>(c.dale));
    put<std::uint64_t>(out, c.seed);
}

NetworkConfig get_config(std::istream& in) {
    NetworkConfig c;
    c.n_neurons = get<std::int32_t>(in);
    c.excit_fraction = get<double>(in);
    c.mean_degree = get<double>(in);
    c.mu_e = get<double>(in);
    c.sigma_e = get<double>(in);
    c.beta = get<double>(in);
    c.sigma_i = get<double>(in);
    c.alpha = get<double>(in);
    c.theta = get<double>(in);
    c.steepness = get<double>(in);
    c.leakage = get<double>(in);
    c.input_fraction = get<double>(in);
    c.input_spread = get<double>(in);
    c.strength_ratio = get<double>(in);
    c.balance_mode = static_cast<BalanceMode>(get<std::uint8_t>(in));
    c.dale = static_cast<DalePolicy>(get<std::uint8_t>(in));
    c.seed = get<std::uint64_t>(in);
    return c;
}

} // namespace

void save_reservoir(const std::string& path, const EIReservoir& res,
                    const Readout* readout) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_reservoir: cannot open " + path);

    out.write(kMagic, sizeof kMagic);
    put<std::uint32_t>(out, kVersion);
    put<std::uint32_t>(out, readout ? kFlagReadout : 0u);

    put_config(out, res.config);
    put<std::int32_t>(out, res.n());
    out.write(reinterpret_cast<const char*>(res.neuron_type.data()),
              static_cast<std::streamsize>(res.neuron_type.size()));
    put_matrix(out, res.exc);
    put_matrix(out, res.inh);
    put_links(out, res.exc_links);
    put_links(out, res.inh_links);
    put_vector(out, res.input_weights);
    put_vector(out, res.threshold);
    put_vector(out, res.leak);
    put(out, res.steepness);
    put_vector(out, res.potential);
    put_vector(out, res.rate);

    if (readout) {
        put_matrix(out, readout->w_out);
        put(out, readout->eta);
        put<std::uint8_t>(out, readout->has_bias ? 1 : 0);
    }
    if (!out) throw std::runtime_error("save_reservoir: write failed for " + path);
}

ReservoirDump load_reservoir(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_reservoir: cannot open " + path);

    char magic[8];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
        throw std::runtime_error("load_reservoir: not a reservoir dump: " + path);
    const auto version = get<std::uint32_t>(in);
    if (version != kVersion)
        throw std::runtime_error("load_reservoir: unsupported format version");
    const auto flags = get<std::uint32_t>(in);

    ReservoirDump dump;
    EIReservoir& res = dump.reservoir;
    res.config = get_config(in);
    const auto n = get<std::int32_t>(in);
    if (n < 0) throw std::runtime_error("load_reservoir: negative size");
    res.neuron_type.resize(static_cast<std::size_t>(n));
    in.read(reinterpret_cast<char*>(res.neuron_type.data()), n);
    if (!in) throw std::runtime_error("load_reservoir: truncated file");
    res.exc = get_matrix(in);
    res.inh = get_matrix(in);
    res.exc_links = get_links(in);
    res.inh_links = get_links(in);
    res.input_weights = get_vector(in);
    res.threshold = get_vector(in);
    res.leak = get_vector(in);
    res.steepness = get<double>(in);
    res.potential = get_vector(in);
    res.rate = get_vector(in);

    if (flags & kFlagReadout) {
        Readout ro;
        ro.w_out = get_matrix(in);
        ro.eta = get<double>(in);
        ro.has_bias = get<std::uint8_t>(in) != 0;
        dump.readout = std::move(ro);
    }
    return dump;
}

} // namespace eirc
