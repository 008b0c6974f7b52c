#include "spde/io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>

namespace spde {

static_assert(std::endian::native == std::endian::little, "binary formats assume little-endian");

namespace {

constexpr char kBundleMagic[8] = {'S', 'P', 'D', 'E', 'B', 'N', 'D', '1'};
constexpr char kFieldMagic[8] = {'S', 'P', 'F', 'L', 'D', '0', '0', '1'};

std::ofstream open_out(const std::filesystem::path& path, bool binary) {
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path, binary ? std::ios::binary : std::ios::out);
    if (!os)
        throw IoError("cannot open " + path.string() + " for writing");
    return os;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw IoError("cannot open " + path.string());
    return is;
}

template <class T>
void put(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is, const std::filesystem::path& path) {
    T v{};
    if (!is.read(reinterpret_cast<char*>(&v), sizeof(T)))
        throw IoError("truncated file " + path.string());
    return v;
}

void put_doubles(std::ostream& os, std::span<const double> v) {
    os.write(reinterpret_cast<const char*>(v.data()),
             static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::vector<double> get_doubles(std::istream& is, std::size_t n, const std::filesystem::path& path) {
    std::vector<double> v(n);
    if (!is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double))))
        throw IoError("truncated file " + path.string());
    return v;
}

void check_magic(std::istream& is, const char (&magic)[8], const std::filesystem::path& path) {
    char buf[8];
    if (!is.read(buf, 8) || std::memcmp(buf, magic, 8) != 0)
        throw IoError("bad magic in " + path.string());
}

void finish(std::ostream& os, const std::filesystem::path& path) {
    os.flush();
    if (!os)
        throw IoError("write failed for " + path.string());
}

} // namespace

void write_bundle(const std::filesystem::path& path, const BrownianBundle& b) {
    auto os = open_out(path, true);
    os.write(kBundleMagic, 8);
    put<std::uint64_t>(os, static_cast<std::uint64_t>(b.modes()));
    put<std::uint64_t>(os, static_cast<std::uint64_t>(b.steps()));
    put<std::uint64_t>(os, b.seed());
    put<std::uint64_t>(os, static_cast<std::uint64_t>(b.level()));
    put<double>(os, b.T());
    put_doubles(os, b.raw_increments());
    put_doubles(os, b.raw_nodes());
    finish(os, path);
}

BrownianBundle read_bundle(const std::filesystem::path& path) {
    auto is = open_in(path);
    check_magic(is, kBundleMagic, path);
    const auto modes = get<std::uint64_t>(is, path);
    const auto steps = get<std::uint64_t>(is, path);
    const auto seed = get<std::uint64_t>(is, path);
    const auto level = get<std::uint64_t>(is, path);
    const double T = get<double>(is, path);
    if (modes > (1u << 20) || steps > (1u << 30))
        throw IoError("implausible bundle header in " + path.string());
    auto inc = get_doubles(is, modes * steps, path);
    auto nodes = get_doubles(is, modes * (steps + 1), path);
    return BrownianBundle::from_raw(seed, static_cast<int>(modes), static_cast<int>(steps), T,
                                    static_cast<int>(level), std::move(inc), std::move(nodes));
}

void write_field(const std::filesystem::path& path, const Field& f, double t) {
    const Grid& g = f.grid();
    auto os = open_out(path, true);
    os.write(kFieldMagic, 8);
    put<std::uint64_t>(os, static_cast<std::uint64_t>(g.dim));
    put<std::uint64_t>(os, static_cast<std::uint64_t>(g.n_a));
    put<std::uint64_t>(os, static_cast<std::uint64_t>(g.n_x[0]));
    put<std::uint64_t>(os, static_cast<std::uint64_t>(g.dim == 2 ? g.n_x[1] : 1));
    put<double>(os, g.a_plus);
    put<double>(os, g.extent[0]);
    put<double>(os, g.dim == 2 ? g.extent[1] : 0.0);
    put<double>(os, t);
    put_doubles(os, f.values());
    finish(os, path);
}

FieldFile read_field(const std::filesystem::path& path) {
    auto is = open_in(path);
    check_magic(is, kFieldMagic, path);
    FieldFile out;
    out.dim = static_cast<int>(get<std::uint64_t>(is, path));
    out.n_a = static_cast<int>(get<std::uint64_t>(is, path));
    out.n_x[0] = static_cast<int>(get<std::uint64_t>(is, path));
    out.n_x[1] = static_cast<int>(get<std::uint64_t>(is, path));
    out.a_plus = get<double>(is, path);
    out.extent[0] = get<double>(is, path);
    out.extent[1] = get<double>(is, path);
    out.t = get<double>(is, path);
    if (out.dim < 1 || out.dim > 2 || out.n_a < 0 || out.n_x[0] < 1 || out.n_x[1] < 1)
        throw IoError("bad field header in " + path.string());
    const std::size_t n = static_cast<std::size_t>(out.n_a + 1) * out.n_x[0] * out.n_x[1];
    out.values = get_doubles(is, n, path);
    return out;
}

void write_series_csv(const std::filesystem::path& path, const SolveReport& r) {
    auto os = open_out(path, false);
    os << std::setprecision(17);
    os << "t,h_norm_y,U,births\n";
    for (std::size_t n = 0; n < r.times.size(); ++n)
        os << r.times[n] << ',' << r.h_norm_y[n] << ',' << r.u_value[n] << ',' << r.births[n]
           << '\n';
    finish(os, path);
}

void write_checks_csv(const std::filesystem::path& path, const std::vector<CheckRow>& rows) {
    auto os = open_out(path, false);
    os << std::setprecision(17);
    os << "name,value,threshold,pass\n";
    for (const auto& row : rows)
        os << row.name << ',' << row.value << ',' << row.threshold << ','
           << (row.pass ? "pass" : "fail") << '\n';
    finish(os, path);
}

void write_snapshots(const std::filesystem::path& dir, const SolveReport& r) {
    for (std::size_t q = 0; q < r.stored_levels.size(); ++q) {
        const int n = r.stored_levels[q];
        write_field(dir / ("p_" + std::to_string(n) + ".bin"), r.p[q], r.grid.time(n));
    }
}

} // namespace spde
