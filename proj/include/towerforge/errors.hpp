#pragma once

#include <stdexcept>
#include <string>

namespace towerforge {

// Base of all library errors. Two branches matter to the CLI:
// ValidationError maps to exit code 2, IoError to exit code 1.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& msg) : Error(msg) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error(msg) {}
};

// geo
struct NonFiniteInput : ValidationError {
    explicit NonFiniteInput(const std::string& msg) : ValidationError(msg) {}
};
struct LatitudeOutOfRange : ValidationError {
    explicit LatitudeOutOfRange(const std::string& msg) : ValidationError(msg) {}
};
struct DegenerateBox : ValidationError {
    explicit DegenerateBox(const std::string& msg) : ValidationError(msg) {}
};

// ingest
struct MalformedDocument : ValidationError {
    explicit MalformedDocument(const std::string& msg) : ValidationError(msg) {}
};
struct NotAFeatureCollection : ValidationError {
    explicit NotAFeatureCollection(const std::string& msg) : ValidationError(msg) {}
};
struct InvalidPolygon : ValidationError {
    explicit InvalidPolygon(const std::string& msg) : ValidationError(msg) {}
};

// raster
struct InvalidGsd : ValidationError {
    explicit InvalidGsd(const std::string& msg) : ValidationError(msg) {}
};
struct EmptyRaster : ValidationError {
    explicit EmptyRaster(const std::string& msg) : ValidationError(msg) {}
};
struct RasterTooSmall : ValidationError {
    explicit RasterTooSmall(const std::string& msg) : ValidationError(msg) {}
};
class BufferTooLarge : public ValidationError {
public:
    BufferTooLarge(double buffer_px, double limit_px, const std::string& msg)
        : ValidationError(msg), buffer_px(buffer_px), limit_px(limit_px) {}
    double buffer_px;  // radius in output pixels
    double limit_px;   // quarter of the chip size
};
struct IoFailure : IoError {
    explicit IoFailure(const std::string& msg) : IoError(msg) {}
};

// dataset
struct DuplicateChip : ValidationError {
    explicit DuplicateChip(const std::string& msg) : ValidationError(msg) {}
};
struct EmptyDataset : ValidationError {
    explicit EmptyDataset(const std::string& msg) : ValidationError(msg) {}
};
struct MissingGeoCenter : ValidationError {
    explicit MissingGeoCenter(const std::string& msg) : ValidationError(msg) {}
};
struct UnknownVariant : ValidationError {
    explicit UnknownVariant(const std::string& msg) : ValidationError(msg) {}
};

// eval
struct UndefinedAp : ValidationError {
    explicit UndefinedAp(const std::string& msg) : ValidationError(msg) {}
};
struct UnknownImageId : ValidationError {
    explicit UnknownImageId(const std::string& msg) : ValidationError(msg) {}
};

// simkit
struct PlacementFailure : ValidationError {
    explicit PlacementFailure(const std::string& msg) : ValidationError(msg) {}
};
struct UnknownSelector : ValidationError {
    explicit UnknownSelector(const std::string& msg) : ValidationError(msg) {}
};

}  // namespace towerforge
