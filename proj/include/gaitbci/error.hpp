#pragma once

#include <stdexcept>
#include <string>

namespace gaitbci {

// Every failure raised by the library derives from Error so callers (the CLI
// in particular) can catch a single type and still report the category.
class Error : public std::runtime_error {
public:
  Error(std::string category, const std::string& what)
      : std::runtime_error(category + ": " + what), category_(std::move(category)) {}
  const std::string& category() const noexcept { return category_; }

private:
  std::string category_;
};

#define GAITBCI_DEFINE_ERROR(Name, tag)                                   \
  class Name : public Error {                                             \
  public:                                                                 \
    explicit Name(const std::string& what) : Error(tag, what) {}          \
  };

GAITBCI_DEFINE_ERROR(ConfigError, "configuration error")
GAITBCI_DEFINE_ERROR(DataError, "data error")
GAITBCI_DEFINE_ERROR(AlignmentError, "alignment error")
GAITBCI_DEFINE_ERROR(EmptyInputError, "empty-input error")
GAITBCI_DEFINE_ERROR(InsufficientDataError, "insufficient-data error")
GAITBCI_DEFINE_ERROR(DegenerateDataError, "degenerate-data error")
GAITBCI_DEFINE_ERROR(NumericalError, "numerical error")
GAITBCI_DEFINE_ERROR(GeometryError, "geometry error")
GAITBCI_DEFINE_ERROR(InputError, "input error")
GAITBCI_DEFINE_ERROR(SimulationError, "simulation error")
GAITBCI_DEFINE_ERROR(DecoderError, "decoder error")
GAITBCI_DEFINE_ERROR(FormatError, "format error")

#undef GAITBCI_DEFINE_ERROR

} // namespace gaitbci
