#pragma once

#include <stdexcept>
#include <string>

namespace gsmpc {

/// Base class for all domain errors raised by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

#define GSMPC_DEFINE_ERROR(Name)                                     \
    class Name : public Error {                                      \
    public:                                                          \
        explicit Name(const std::string& msg = #Name) : Error(msg) {} \
    }

GSMPC_DEFINE_ERROR(BehindCamera);
GSMPC_DEFINE_ERROR(DimensionMismatch);
GSMPC_DEFINE_ERROR(EmptyScene);
GSMPC_DEFINE_ERROR(NoViews);
GSMPC_DEFINE_ERROR(NoObservations);
GSMPC_DEFINE_ERROR(EmptyCloud);
GSMPC_DEFINE_ERROR(InvalidAction);
GSMPC_DEFINE_ERROR(AlreadySolved);
GSMPC_DEFINE_ERROR(EmptySet);
GSMPC_DEFINE_ERROR(ShapeMismatch);
GSMPC_DEFINE_ERROR(LengthMismatch);
GSMPC_DEFINE_ERROR(EmptyDataset);
GSMPC_DEFINE_ERROR(EmptyQuerySet);
GSMPC_DEFINE_ERROR(NoValidActions);
GSMPC_DEFINE_ERROR(IoError);
GSMPC_DEFINE_ERROR(ParseError);
GSMPC_DEFINE_ERROR(MissingFrames);
GSMPC_DEFINE_ERROR(InvalidArgument);

#undef GSMPC_DEFINE_ERROR

} // namespace gsmpc
