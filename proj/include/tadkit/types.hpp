#ifndef TADKIT_TYPES_HPP
#define TADKIT_TYPES_HPP

#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "tadkit/errors.hpp"
#include "tadkit/geometry.hpp"

namespace tadkit {

enum class Precision { f32, f64 };

inline const char* precision_name(Precision p) { return p == Precision::f32 ? "f32" : "f64"; }

inline Precision precision_from_name(const std::string& s) {
    if (s == "f32") return Precision::f32;
    if (s == "f64") return Precision::f64;
    throw ConfigError("unknown precision '" + s + "' (expected f32 or f64)");
}

// Dense row-major real array. Values are held as doubles; the precision tag
// selects the on-disk width (geometry and checks always run in 64-bit).
struct DenseArray {
    std::vector<size_t> shape;
    std::vector<double> data;
    Precision precision = Precision::f64;

    DenseArray() = default;
    DenseArray(std::vector<size_t> shp, Precision prec = Precision::f64)
        : shape(std::move(shp)), precision(prec) {
        data.assign(element_count(), 0.0);
    }
    DenseArray(std::vector<size_t> shp, std::vector<double> values, Precision prec = Precision::f64)
        : shape(std::move(shp)), data(std::move(values)), precision(prec) {
        if (element_count() != data.size()) {
            throw DataError("dense array shape/data mismatch");
        }
    }

    size_t element_count() const {
        return std::accumulate(shape.begin(), shape.end(), size_t{1},
                               [](size_t a, size_t b) { return a * b; });
    }
};

// Entry (i, j) is tiou(as[i], bs[j]).
inline DenseArray tiou_matrix(const std::vector<Interval>& as, const std::vector<Interval>& bs) {
    DenseArray m({as.size(), bs.size()});
    for (size_t i = 0; i < as.size(); ++i) {
        for (size_t j = 0; j < bs.size(); ++j) {
            m.data[i * bs.size() + j] = tiou(as[i], bs[j]);
        }
    }
    return m;
}

struct ActionInstance {
    Interval interval;
    int class_id = 0;

    ActionInstance() = default;
    ActionInstance(Interval iv, int cls) : interval(iv), class_id(cls) {
        if (class_id < 0) throw DataError("class id must be non-negative");
    }
};

struct Detection {
    Interval interval;
    int class_id = 0;
    double score = 0.0;

    Detection() = default;
    Detection(Interval iv, int cls, double s) : interval(iv), class_id(cls), score(s) {
        if (!(score >= 0.0 && score <= 1.0)) {
            throw DataError("detection score outside [0, 1]: " + std::to_string(s));
        }
    }
};

struct VideoAnnotation {
    std::string video_id;
    double duration = 0.0;  // seconds
    double fps = 0.0;       // feature sampling rate
    std::vector<ActionInstance> instances;

    void validate(int num_classes) const {
        if (!(duration > 0.0)) throw DataError("video '" + video_id + "': non-positive duration");
        if (!(fps > 0.0)) throw DataError("video '" + video_id + "': non-positive fps");
        for (const auto& inst : instances) {
            if (inst.interval.start < 0.0 || inst.interval.end > duration) {
                throw DataError("video '" + video_id + "': instance outside [0, duration]");
            }
            if (num_classes > 0 && inst.class_id >= num_classes) {
                throw DataError("video '" + video_id + "': class id " +
                                std::to_string(inst.class_id) + " outside catalog");
            }
        }
    }
};

}  // namespace tadkit

#endif
