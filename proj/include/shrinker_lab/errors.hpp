#pragma once

#include <stdexcept>
#include <string>

namespace shrinker_lab {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

#define SHRINKER_LAB_ERROR(Name)                                            \
    struct Name : Error {                                                   \
        using Error::Error;                                                 \
    }

SHRINKER_LAB_ERROR(DomainError);        // precondition / argument out of range
SHRINKER_LAB_ERROR(NoSolutionError);    // profile level below min K
SHRINKER_LAB_ERROR(DegenerateInputError);
SHRINKER_LAB_ERROR(IntegrationError);   // step underflow or invariant drift
SHRINKER_LAB_ERROR(NonConvergenceError);
SHRINKER_LAB_ERROR(BracketingError);
SHRINKER_LAB_ERROR(ConstructionError);
SHRINKER_LAB_ERROR(ValidationError);
SHRINKER_LAB_ERROR(TopologyError);
SHRINKER_LAB_ERROR(AdmissibilityError);
SHRINKER_LAB_ERROR(ResolutionError);
SHRINKER_LAB_ERROR(IntegrandError);
SHRINKER_LAB_ERROR(CertificateError);
SHRINKER_LAB_ERROR(IOError);

#undef SHRINKER_LAB_ERROR

} // namespace shrinker_lab
