/*
 * Copyright 2026 The lsemap Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
 */

#ifndef LSEMAP_ERROR_HPP
#define LSEMAP_ERROR_HPP

#include <stdexcept>
#include <string>

namespace lsemap {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define LSEMAP_DEFINE_ERROR(Name)              \
    class Name : public Error {                \
    public:                                    \
        using Error::Error;                    \
    }

/// Regularized Gram matrix is not numerically positive definite after jitter escalation.
LSEMAP_DEFINE_ERROR(FactorizationFailure);
LSEMAP_DEFINE_ERROR(InvalidConfig);
/// No unmeasured candidate remains.
LSEMAP_DEFINE_ERROR(Exhausted);
LSEMAP_DEFINE_ERROR(DuplicateMeasurement);
LSEMAP_DEFINE_ERROR(OffGridIndex);
LSEMAP_DEFINE_ERROR(ValueNotFinite);
/// Measurement posted to a session that already converged or hit its iteration cap.
LSEMAP_DEFINE_ERROR(SessionClosed);
LSEMAP_DEFINE_ERROR(ParseError);
LSEMAP_DEFINE_ERROR(IncompleteLattice);
LSEMAP_DEFINE_ERROR(NonUniformSpacing);
LSEMAP_DEFINE_ERROR(UnknownSession);
LSEMAP_DEFINE_ERROR(ConflictingConcurrentPost);

#undef LSEMAP_DEFINE_ERROR

}  // namespace lsemap

#endif  // LSEMAP_ERROR_HPP
