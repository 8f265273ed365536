#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace origami {

// Domain error codes. The string form is part of the wire format (HTTP error
// bodies, CLI summaries), so names must stay stable.
enum class Errc {
  InconsistentActuation,
  DuplicateEdge,
  UnknownKeypoint,
  EdgeCrossing,
  SelfEdge,
  DuplicateKeypointId,
  IsolatedKeypoint,
  MergeCreatesDuplicateEdge,
  MergeCreatesSelfEdge,
  NoEnclosingCycle,
  NoCreaseInCycle,
  PanelAlreadyDefined,
  OnEdgeAmbiguous,
  NonStarShapedPanel,
  DegeneratePolygon,
  TriangulationFailed,
  NoPanels,
  InvalidPanel,
  ZeroMassKeypoint,
  DegenerateRestTriangle,
  NumericalBlowup,
  NotActuatedKeypoint,
  SphereNeverAtRest,
  UnmeshedPanel,
  DuplicatedSharedKeypoint,
  DanglingReference,
  CountMismatch,
  MissingActuator,
  ParamsOutOfRange,
  BadBounds,
  LengthMismatch,
  BadDocument,
  NotFound,
  InvalidArgument,
};

inline constexpr std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::InconsistentActuation: return "InconsistentActuation";
    case Errc::DuplicateEdge: return "DuplicateEdge";
    case Errc::UnknownKeypoint: return "UnknownKeypoint";
    case Errc::EdgeCrossing: return "EdgeCrossing";
    case Errc::SelfEdge: return "SelfEdge";
    case Errc::DuplicateKeypointId: return "DuplicateKeypointId";
    case Errc::IsolatedKeypoint: return "IsolatedKeypoint";
    case Errc::MergeCreatesDuplicateEdge: return "MergeCreatesDuplicateEdge";
    case Errc::MergeCreatesSelfEdge: return "MergeCreatesSelfEdge";
    case Errc::NoEnclosingCycle: return "NoEnclosingCycle";
    case Errc::NoCreaseInCycle: return "NoCreaseInCycle";
    case Errc::PanelAlreadyDefined: return "PanelAlreadyDefined";
    case Errc::OnEdgeAmbiguous: return "OnEdgeAmbiguous";
    case Errc::NonStarShapedPanel: return "NonStarShapedPanel";
    case Errc::DegeneratePolygon: return "DegeneratePolygon";
    case Errc::TriangulationFailed: return "TriangulationFailed";
    case Errc::NoPanels: return "NoPanels";
    case Errc::InvalidPanel: return "InvalidPanel";
    case Errc::ZeroMassKeypoint: return "ZeroMassKeypoint";
    case Errc::DegenerateRestTriangle: return "DegenerateRestTriangle";
    case Errc::NumericalBlowup: return "NumericalBlowup";
    case Errc::NotActuatedKeypoint: return "NotActuatedKeypoint";
    case Errc::SphereNeverAtRest: return "SphereNeverAtRest";
    case Errc::UnmeshedPanel: return "UnmeshedPanel";
    case Errc::DuplicatedSharedKeypoint: return "DuplicatedSharedKeypoint";
    case Errc::DanglingReference: return "DanglingReference";
    case Errc::CountMismatch: return "CountMismatch";
    case Errc::MissingActuator: return "MissingActuator";
    case Errc::ParamsOutOfRange: return "ParamsOutOfRange";
    case Errc::BadBounds: return "BadBounds";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::BadDocument: return "BadDocument";
    case Errc::NotFound: return "NotFound";
    case Errc::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

/// Exception carrying a domain error code and the entity it refers to
/// (e.g. "edge 3", "panel 1", "step 1200").
class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string message, std::string entity = {})
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        message_(std::move(message)),
        entity_(std::move(entity)) {}

  Errc code() const noexcept { return code_; }
  const std::string& message() const noexcept { return message_; }
  const std::string& entity() const noexcept { return entity_; }

 private:
  Errc code_;
  std::string message_;
  std::string entity_;
};

}  // namespace origami
