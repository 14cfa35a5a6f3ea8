/**
 * Copyright 2026 The idslab Authors
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
 */

#include "idslab/common.hpp"

#include <cmath>
#include <sstream>

namespace idslab {

void GridSpec::validate() const {
  if (!(L > 0.0) || !std::isfinite(L)) {
    throw PreconditionError("GridSpec: box side L must be positive and finite");
  }
  if (n < 1) {
    throw PreconditionError("GridSpec: need at least one interior node per side");
  }
}

std::string to_string(const GridSpec& grid) {
  std::ostringstream os;
  os << "GridSpec{L=" << grid.L << ", n=" << grid.n << ", h=" << grid.h() << "}";
  return os.str();
}

}  // namespace idslab
