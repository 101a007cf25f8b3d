#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "qttkit/tensor.hpp"

namespace qtt {

/// Binary format, version 1 (layout in docs/FORMAT.md). Values round-trip bit-exactly.
enum class FormatTag : std::uint32_t { dense = 1, canonical = 2, tucker = 3, tt = 4, tt_matrix = 5 };

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

void write(std::ostream& out, const DenseTensor& x);
void write(std::ostream& out, const CanonicalTensor& x);
void write(std::ostream& out, const TuckerTensor& x);
void write(std::ostream& out, const TtTensor& x);
void write(std::ostream& out, const TtMatrix& x);

/// Reads the header only and rewinds; throws FormatError on a bad magic or version.
FormatTag peek_tag(std::istream& in);

DenseTensor read_dense(std::istream& in);
CanonicalTensor read_canonical(std::istream& in);
TuckerTensor read_tucker(std::istream& in);
TtTensor read_tt(std::istream& in);
TtMatrix read_tt_matrix(std::istream& in);

template <class T>
void save(const std::string& path, const T& x);
template <class T>
T load(const std::string& path);

}  // namespace qtt
