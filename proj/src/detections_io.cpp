#include "tadkit/detections_io.hpp"

#include <cstdio>
#include <fstream>

#include "tadkit/errors.hpp"

namespace tadkit {

void write_detections(const std::string& path, const DetectionMap& dets) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write detections to " + path);
    out << "{\n";
    bool first_video = true;
    for (const auto& [vid, vdets] : dets) {  // std::map: already id-sorted
        if (!first_video) out << ",\n";
        first_video = false;
        out << "  \"" << vid << "\": [";
        char buf[160];
        for (size_t i = 0; i < vdets.size(); ++i) {
            std::snprintf(buf, sizeof(buf),
                          "%s\n    {\"start\": %.9f, \"end\": %.9f, \"class\": %d, "
                          "\"score\": %.9f}",
                          i == 0 ? "" : ",", vdets[i].interval.start, vdets[i].interval.end,
                          vdets[i].class_id, vdets[i].score);
            out << buf;
        }
        out << (vdets.empty() ? "]" : "\n  ]");
    }
    out << "\n}\n";
}

DetectionMap read_detections(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open detections: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw DataError("detections parse error in " + path + ": " + e.what());
    }
    if (!j.is_object()) throw DataError("detections file must be an object at /");
    DetectionMap out;
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string vptr = "/" + it.key();
        if (!it.value().is_array()) throw DataError("expected array at " + vptr);
        std::vector<Detection> dets;
        for (size_t i = 0; i < it.value().size(); ++i) {
            const std::string dptr = vptr + "/" + std::to_string(i);
            const json& jd = it.value()[i];
            if (!jd.is_object()) throw DataError("expected object at " + dptr);
            for (const char* key : {"start", "end", "class", "score"}) {
                if (!jd.contains(key)) throw DataError("missing key at " + dptr + "/" + key);
            }
            for (auto kit = jd.begin(); kit != jd.end(); ++kit) {
                if (kit.key() != "start" && kit.key() != "end" && kit.key() != "class" &&
                    kit.key() != "score") {
                    throw DataError("unknown key at " + dptr + "/" + kit.key());
                }
            }
            if (!jd["start"].is_number() || !jd["end"].is_number() ||
                !jd["score"].is_number() || !jd["class"].is_number_integer()) {
                throw DataError("bad value types at " + dptr);
            }
            const double s = jd["start"].get<double>(), e = jd["end"].get<double>();
            if (!(e > s)) throw DataError("end must exceed start at " + dptr + "/end");
            const double score = jd["score"].get<double>();
            if (!(score >= 0.0 && score <= 1.0)) {
                throw DataError("score outside [0,1] at " + dptr + "/score");
            }
            dets.emplace_back(Interval(s, e), jd["class"].get<int>(), score);
        }
        out[it.key()] = std::move(dets);
    }
    return out;
}

}  // namespace tadkit
