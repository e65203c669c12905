#pragma once

#include <stdexcept>
#include <string>

namespace hycon {

// Root of every error thrown by the library. `category()` drives the CLI
// exit-code mapping.
class Error : public std::runtime_error {
 public:
  enum class Category { validation, configuration, io };

  Error(Category category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  Category category() const noexcept { return category_; }

 private:
  Category category_;
};

#define HYCON_DEFINE_ERROR(Name, Cat)                                       \
  class Name : public Error {                                               \
   public:                                                                  \
    explicit Name(const std::string& what) : Error(Category::Cat, what) {} \
  };

HYCON_DEFINE_ERROR(DimensionError, configuration)
HYCON_DEFINE_ERROR(ConfigError, configuration)
HYCON_DEFINE_ERROR(EmptySetError, configuration)
HYCON_DEFINE_ERROR(NumericError, validation)
HYCON_DEFINE_ERROR(InvalidTangentError, validation)
HYCON_DEFINE_ERROR(DegenerateError, validation)
HYCON_DEFINE_ERROR(ValidationError, validation)
HYCON_DEFINE_ERROR(CorruptionError, validation)
HYCON_DEFINE_ERROR(GenerationError, validation)
HYCON_DEFINE_ERROR(RankDeficiencyError, validation)
HYCON_DEFINE_ERROR(FormatError, io)
HYCON_DEFINE_ERROR(IoError, io)

#undef HYCON_DEFINE_ERROR

}  // namespace hycon
