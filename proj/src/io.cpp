#include "qttkit/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <type_traits>

namespace qtt {

namespace {

constexpr std::array<char, 4> kMagic{'Q', 'T', 'T', 'K'};
constexpr std::uint32_t kVersion = 1;
// guards against absurd headers before allocating
constexpr std::uint64_t kMaxDim = std::uint64_t{1} << 40;

template <class T>
T to_little(T v) {
    if constexpr (std::endian::native == std::endian::big) {
        auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
        std::reverse(bytes.begin(), bytes.end());
        return std::bit_cast<T>(bytes);
    }
    return v;
}

template <class T>
void put(std::ostream& out, T v) {
    const T le = to_little(v);
    out.write(reinterpret_cast<const char*>(&le), sizeof(T));
}

template <class T>
T get(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw FormatError("qttkit format: unexpected end of stream");
    return to_little(v);
}

void put_doubles(std::ostream& out, const double* p, Index n) {
    if constexpr (std::endian::native == std::endian::little) {
        out.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
    } else {
        for (Index k = 0; k < n; ++k) put(out, p[k]);
    }
}

void get_doubles(std::istream& in, double* p, Index n) {
    if constexpr (std::endian::native == std::endian::little) {
        in.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
        if (!in) throw FormatError("qttkit format: unexpected end of stream");
    } else {
        for (Index k = 0; k < n; ++k) p[k] = get<double>(in);
    }
}

void put_header(std::ostream& out, FormatTag tag, std::size_t order) {
    out.write(kMagic.data(), kMagic.size());
    put<std::uint32_t>(out, kVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(tag));
    put<std::uint64_t>(out, order);
}

void put_sizes(std::ostream& out, const std::vector<Index>& v) {
    for (Index x : v) put<std::uint64_t>(out, static_cast<std::uint64_t>(x));
}

std::vector<Index> get_sizes(std::istream& in, std::size_t n, bool allow_zero = false) {
    std::vector<Index> v(n);
    for (auto& x : v) {
        const auto u = get<std::uint64_t>(in);
        if ((!allow_zero && u == 0) || u > kMaxDim) throw FormatError("qttkit format: bad size in header");
        x = static_cast<Index>(u);
    }
    return v;
}

std::size_t read_header(std::istream& in, FormatTag expect) {
    std::array<char, 4> magic{};
    in.read(magic.data(), magic.size());
    if (!in || magic != kMagic) throw FormatError("qttkit format: bad magic");
    if (get<std::uint32_t>(in) != kVersion) throw FormatError("qttkit format: unsupported version");
    const auto tag = get<std::uint32_t>(in);
    if (tag != static_cast<std::uint32_t>(expect)) throw FormatError("qttkit format: unexpected format tag");
    const auto order = get<std::uint64_t>(in);
    if (order > 4096) throw FormatError("qttkit format: bad order");
    return static_cast<std::size_t>(order);
}

Matrix get_matrix(std::istream& in, Index rows, Index cols) {
    Matrix m(rows, cols);
    get_doubles(in, m.data(), m.size());
    return m;
}

}  // namespace

void write(std::ostream& out, const DenseTensor& x) {
    put_header(out, FormatTag::dense, x.order());
    put_sizes(out, x.shape().dims());
    put_doubles(out, x.values().data(), x.size());
}

void write(std::ostream& out, const CanonicalTensor& x) {
    put_header(out, FormatTag::canonical, x.order());
    put_sizes(out, x.shape().dims());
    put<std::uint64_t>(out, static_cast<std::uint64_t>(x.rank()));
    for (const auto& f : x.factors()) put_doubles(out, f.data(), f.size());
}

void write(std::ostream& out, const TuckerTensor& x) {
    put_header(out, FormatTag::tucker, x.order());
    put_sizes(out, x.shape().dims());
    put_sizes(out, x.ranks());
    put<std::uint64_t>(out, x.orthogonal() ? 1 : 0);
    put_doubles(out, x.core().values().data(), x.core().size());
    for (const auto& f : x.factors()) put_doubles(out, f.data(), f.size());
}

void write(std::ostream& out, const TtTensor& x) {
    put_header(out, FormatTag::tt, x.order());
    put_sizes(out, x.shape().dims());
    put_sizes(out, x.ranks());
    for (std::size_t l = 0; l < x.order(); ++l) put<std::uint64_t>(out, static_cast<std::uint64_t>(x.orthogonality(l)));
    for (const auto& c : x.cores()) put_doubles(out, c.data(), c.size());
}

void write(std::ostream& out, const TtMatrix& x) {
    put_header(out, FormatTag::tt_matrix, x.order());
    put_sizes(out, x.row_shape().dims());
    put_sizes(out, x.col_shape().dims());
    put_sizes(out, x.ranks());
    for (const auto& c : x.cores()) put_doubles(out, c.data(), c.size());
}

FormatTag peek_tag(std::istream& in) {
    const auto pos = in.tellg();
    std::array<char, 4> magic{};
    in.read(magic.data(), magic.size());
    if (!in || magic != kMagic) throw FormatError("qttkit format: bad magic");
    if (get<std::uint32_t>(in) != kVersion) throw FormatError("qttkit format: unsupported version");
    const auto tag = get<std::uint32_t>(in);
    in.seekg(pos);
    if (tag < 1 || tag > 5) throw FormatError("qttkit format: unknown format tag");
    return static_cast<FormatTag>(tag);
}

DenseTensor read_dense(std::istream& in) {
    const std::size_t d = read_header(in, FormatTag::dense);
    Shape shape(get_sizes(in, d));
    std::vector<double> v(static_cast<std::size_t>(shape.size()));
    get_doubles(in, v.data(), shape.size());
    return DenseTensor(std::move(shape), std::move(v));
}

CanonicalTensor read_canonical(std::istream& in) {
    const std::size_t d = read_header(in, FormatTag::canonical);
    const auto dims = get_sizes(in, d);
    const Index r = get_sizes(in, 1, true)[0];
    if (r == 0) return CanonicalTensor::zero(Shape(dims));
    std::vector<Matrix> f;
    for (Index n : dims) f.push_back(get_matrix(in, n, r));
    return CanonicalTensor(std::move(f));
}

TuckerTensor read_tucker(std::istream& in) {
    const std::size_t d = read_header(in, FormatTag::tucker);
    const auto dims = get_sizes(in, d);
    const auto ranks = get_sizes(in, d);
    const bool orth = get<std::uint64_t>(in) != 0;
    Shape cs(ranks);
    std::vector<double> core(static_cast<std::size_t>(cs.size()));
    get_doubles(in, core.data(), cs.size());
    std::vector<Matrix> f;
    for (std::size_t l = 0; l < d; ++l) f.push_back(get_matrix(in, dims[l], ranks[l]));
    return TuckerTensor(DenseTensor(std::move(cs), std::move(core)), std::move(f), orth);
}

TtTensor read_tt(std::istream& in) {
    const std::size_t d = read_header(in, FormatTag::tt);
    const auto dims = get_sizes(in, d);
    const auto ranks = get_sizes(in, d + 1);
    std::vector<Orthogonality> orth;
    for (std::size_t l = 0; l < d; ++l) {
        const auto o = get<std::uint64_t>(in);
        if (o > 2) throw FormatError("qttkit format: bad orthogonality flag");
        orth.push_back(static_cast<Orthogonality>(o));
    }
    std::vector<Matrix> cores;
    for (std::size_t l = 0; l < d; ++l) cores.push_back(get_matrix(in, ranks[l] * dims[l], ranks[l + 1]));
    return TtTensor(std::move(cores), dims, std::move(orth));
}

TtMatrix read_tt_matrix(std::istream& in) {
    const std::size_t d = read_header(in, FormatTag::tt_matrix);
    const auto rows = get_sizes(in, d);
    const auto cols = get_sizes(in, d);
    const auto ranks = get_sizes(in, d + 1);
    std::vector<Matrix> cores;
    for (std::size_t l = 0; l < d; ++l) cores.push_back(get_matrix(in, ranks[l] * rows[l] * cols[l], ranks[l + 1]));
    return TtMatrix(std::move(cores), rows, cols);
}

template <class T>
void save(const std::string& path, const T& x) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save: cannot open " + path);
    write(out, x);
    if (!out) throw std::runtime_error("save: write failed for " + path);
}

template <class T>
T load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load: cannot open " + path);
    if constexpr (std::is_same_v<T, DenseTensor>) return read_dense(in);
    else if constexpr (std::is_same_v<T, CanonicalTensor>) return read_canonical(in);
    else if constexpr (std::is_same_v<T, TuckerTensor>) return read_tucker(in);
    else if constexpr (std::is_same_v<T, TtTensor>) return read_tt(in);
    else return read_tt_matrix(in);
}

template void save(const std::string&, const DenseTensor&);
template void save(const std::string&, const CanonicalTensor&);
template void save(const std::string&, const TuckerTensor&);
template void save(const std::string&, const TtTensor&);
template void save(const std::string&, const TtMatrix&);
template DenseTensor load(const std::string&);
template CanonicalTensor load(const std::string&);
template TuckerTensor load(const std::string&);
template TtTensor load(const std::string&);
template TtMatrix load(const std::string&);

}  // namespace qtt
