#pragma once

// Scalar type selection. The library is compiled once per precision; each
// build lives in its own inline namespace so a 32-bit and a 64-bit build can
// be linked into the same executable (the 64-bit build exists for
// finite-difference gradient checks).

#ifdef FASTRE_DOUBLE
#define FASTRE_PRECISION_NS f64
#else
#define FASTRE_PRECISION_NS f32
#endif

#define FASTRE_BEGIN_NAMESPACE \
  namespace fastre {           \
  inline namespace FASTRE_PRECISION_NS {
#define FASTRE_END_NAMESPACE \
  }                          \
  }

FASTRE_BEGIN_NAMESPACE

#ifdef FASTRE_DOUBLE
using Real = double;
#else
using Real = float;
#endif

FASTRE_END_NAMESPACE
