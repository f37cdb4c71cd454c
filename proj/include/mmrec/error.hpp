#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mmrec {

/// Base for every error raised by the library. `code()` is a stable short
/// name (e.g. "MalformedLine") that the CLI and the Python module surface.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

#define MMREC_DEFINE_ERROR(Name)                                            \
  class Name : public Error {                                               \
   public:                                                                  \
    explicit Name(const std::string& what = #Name) : Error(#Name, what) {} \
  };

// data pipeline
MMREC_DEFINE_ERROR(MalformedHeader)
MMREC_DEFINE_ERROR(EmptyDataset)
MMREC_DEFINE_ERROR(MissingTimestamps)
MMREC_DEFINE_ERROR(InvalidArgument)
MMREC_DEFINE_ERROR(IoError)

// modality store
MMREC_DEFINE_ERROR(BadMagic)
MMREC_DEFINE_ERROR(DimensionMismatch)
MMREC_DEFINE_ERROR(AllMissing)
MMREC_DEFINE_ERROR(DimMismatch)
MMREC_DEFINE_ERROR(EmptyList)

// models / trainer
MMREC_DEFINE_ERROR(MissingFeatures)
MMREC_DEFINE_ERROR(EmptyBatch)
MMREC_DEFINE_ERROR(IndexOutOfRange)
MMREC_DEFINE_ERROR(NoNegativeAvailable)
MMREC_DEFINE_ERROR(NonFiniteGradient)

// evaluation
MMREC_DEFINE_ERROR(EmptyGroundTruth)
MMREC_DEFINE_ERROR(EmptySplit)

// config
MMREC_DEFINE_ERROR(UnknownKey)
MMREC_DEFINE_ERROR(TypeMismatch)

#undef MMREC_DEFINE_ERROR

class MalformedLine : public Error {
 public:
  MalformedLine(std::size_t line_no, const std::string& detail)
      : Error("MalformedLine",
              "malformed line " + std::to_string(line_no) + ": " + detail),
        line_no_(line_no) {}
  std::size_t line_no() const noexcept { return line_no_; }

 private:
  std::size_t line_no_;
};

class NonFiniteValue : public Error {
 public:
  NonFiniteValue(std::size_t row, std::size_t col)
      : Error("NonFiniteValue", "non-finite feature value at (" +
                                    std::to_string(row) + ", " +
                                    std::to_string(col) + ")"),
        row_(row),
        col_(col) {}
  std::size_t row() const noexcept { return row_; }
  std::size_t col() const noexcept { return col_; }

 private:
  std::size_t row_;
  std::size_t col_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line_no, const std::string& detail)
      : Error("ParseError",
              "config line " + std::to_string(line_no) + ": " + detail),
        line_no_(line_no) {}
  std::size_t line_no() const noexcept { return line_no_; }

 private:
  std::size_t line_no_;
};

}  // namespace mmrec
