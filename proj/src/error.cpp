#include "modematch/error.hpp"

namespace modematch {

void throw_invalid(const std::string& message) {
  throw Error(ErrorKind::InvalidArgument, message);
}

void throw_data(const std::string& message) {
  throw Error(ErrorKind::Data, message);
}

void throw_numerical(const std::string& message) {
  throw Error(ErrorKind::Numerical, message);
}

}  // namespace modematch
