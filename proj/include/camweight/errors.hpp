#pragma once

#include <stdexcept>
#include <string>

namespace camweight {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidPose : public Error {
 public:
  using Error::Error;
};

class DegenerateLookAt : public Error {
 public:
  using Error::Error;
};

// Weighting inputs for which the scheme has no well-defined answer.
class Degenerate : public Error {
 public:
  using Error::Error;
};

class DegenerateWeights : public Degenerate {
 public:
  using Degenerate::Degenerate;
};

// Error weighting with alpha < 1 when every source center sits on the target center.
class DegenerateRig : public Degenerate {
 public:
  using Degenerate::Degenerate;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class ImageTooSmall : public Error {
 public:
  using Error::Error;
};

class ExhaustedSampling : public Error {
 public:
  using Error::Error;
};

class DivergedTraining : public Error {
 public:
  using Error::Error;
};

// Input file that does not parse or does not follow its schema.
class MalformedInput : public Error {
 public:
  using Error::Error;
};

class InvalidConfig : public Error {
 public:
  using Error::Error;
};

}  // namespace camweight
