#include "apde/field_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace apde {

FieldFormatError::FieldFormatError(const std::string& what, std::uint64_t offset)
    : std::runtime_error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset)
{
}

namespace {

constexpr char kMagic[4] = {'A', 'P', 'D', 'E'};

template <class T>
void put(std::vector<std::uint8_t>& out, T value)
{
    static_assert(sizeof(T) == 4 || sizeof(T) == 8);
    using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
    U bits = std::bit_cast<U>(value);
    for (std::size_t b = 0; b < sizeof(T); ++b) out.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
}

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    template <class T>
    T get(const char* what)
    {
        using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
        if (bytes_.size() - pos_ < sizeof(T))
            throw FieldFormatError(std::string("truncated file while reading ") + what, bytes_.size());
        U bits = 0;
        for (std::size_t b = 0; b < sizeof(T); ++b) bits |= static_cast<U>(bytes_[pos_ + b]) << (8 * b);
        pos_ += sizeof(T);
        return std::bit_cast<T>(bits);
    }

    std::size_t pos() const { return pos_; }
    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

std::string snapshot_name(std::size_t k)
{
    std::ostringstream os;
    os << "snapshot_" << std::setw(4) << std::setfill('0') << k << ".apde";
    return os.str();
}

} // namespace

std::vector<std::uint8_t> encode_field(const Field& u, std::span<const double> exponents)
{
    validate(u);
    const std::size_t n = u.grid.rank();
    if (exponents.size() != n) throw std::invalid_argument("encode_field: exponent count must equal the grid rank");
    std::vector<std::uint8_t> out;
    out.reserve(4 + 8 + n * 32 + 8 + u.values.size() * 8);
    out.insert(out.end(), kMagic, kMagic + 4);
    put(out, kFieldVersion);
    put(out, static_cast<std::uint32_t>(n));
    for (double p : exponents) put(out, p);
    for (std::size_t d : u.grid.dims) put(out, static_cast<std::uint64_t>(d));
    for (double o : u.grid.origin) put(out, o);
    for (double h : u.grid.spacing) put(out, h);
    put(out, u.time);
    for (double v : u.values) put(out, v);
    return out;
}

FieldFile decode_field(std::span<const std::uint8_t> bytes)
{
    if (bytes.size() < 4) throw FieldFormatError("truncated file while reading magic", bytes.size());
    if (!std::equal(kMagic, kMagic + 4, bytes.begin())) throw FieldFormatError("bad magic, expected \"APDE\"", 0);
    Reader r(bytes.subspan(0));
    r.get<std::uint32_t>("magic");
    const auto version = r.get<std::uint32_t>("version");
    if (version != kFieldVersion)
        throw FieldFormatError("unsupported version " + std::to_string(version), 4);
    const std::size_t dim_offset = r.pos();
    const auto n = r.get<std::uint32_t>("dimension");
    if (n == 0 || n > 16) throw FieldFormatError("invalid dimension " + std::to_string(n), dim_offset);

    FieldFile f;
    f.exponents.resize(n);
    for (auto& p : f.exponents) p = r.get<double>("exponents");
    Grid& g = f.field.grid;
    g.dims.resize(n);
    std::size_t total = 1;
    for (std::uint32_t a = 0; a < n; ++a) {
        const std::size_t off = r.pos();
        const auto d = r.get<std::uint64_t>("dims");
        if (d < 2 || d > (std::uint64_t{1} << 32)) throw FieldFormatError("invalid dims entry " + std::to_string(d), off);
        g.dims[a] = static_cast<std::size_t>(d);
        total *= g.dims[a];
    }
    g.origin.resize(n);
    for (auto& o : g.origin) o = r.get<double>("origin");
    g.spacing.resize(n);
    for (std::uint32_t a = 0; a < n; ++a) {
        const std::size_t off = r.pos();
        g.spacing[a] = r.get<double>("spacing");
        if (!(g.spacing[a] > 0.0) || !std::isfinite(g.spacing[a])) throw FieldFormatError("non-positive spacing", off);
    }
    f.field.time = r.get<double>("time");
    if (r.remaining() / 8 < total)
        throw FieldFormatError("truncated file: " + std::to_string(total) + " values expected", bytes.size());
    f.field.values.resize(total);
    for (auto& v : f.field.values) v = r.get<double>("values");
    if (r.remaining() != 0) throw FieldFormatError("trailing bytes after field values", r.pos());
    return f;
}

void write_field(const std::filesystem::path& path, const Field& u, std::span<const double> exponents)
{
    const auto bytes = encode_field(u, exponents);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

FieldFile read_field(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return decode_field(bytes);
    } catch (const FieldFormatError& e) {
        throw FieldFormatError(path.string() + ": " + e.what(), e.offset());
    }
}

void write_trajectory(const std::filesystem::path& dir, const Trajectory& traj, std::span<const double> exponents)
{
    traj.check();
    std::filesystem::create_directories(dir);
    for (std::size_t k = 0; k < traj.snapshots.size(); ++k)
        write_field(dir / snapshot_name(k), traj.snapshots[k], exponents);
    const std::size_t rank = traj.snapshots.empty() ? exponents.size() : traj.snapshots.front().grid.rank();
    write_diagnostics_csv(dir / "diagnostics.csv", traj.diagnostics, rank);
}

TrajectoryFile read_trajectory(const std::filesystem::path& dir)
{
    TrajectoryFile tf;
    for (std::size_t k = 0;; ++k) {
        const auto path = dir / snapshot_name(k);
        if (!std::filesystem::exists(path)) break;
        FieldFile f = read_field(path);
        if (k == 0)
            tf.exponents = f.exponents;
        else if (f.exponents != tf.exponents)
            throw std::runtime_error(path.string() + ": exponents differ from the first snapshot");
        tf.trajectory.snapshots.push_back(std::move(f.field));
    }
    if (tf.trajectory.snapshots.empty()) throw std::runtime_error(dir.string() + ": no snapshot files");
    tf.trajectory.diagnostics = read_diagnostics_csv(dir / "diagnostics.csv");
    tf.trajectory.check();
    return tf;
}

} // namespace apde
