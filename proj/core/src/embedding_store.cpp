#include "tins/embedding_store.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "binary_io.hpp"
#include "tins/error.hpp"

namespace tins {

namespace {

constexpr std::uint32_t kDatasetFormatVersion = 1;

bool frame_less(const FrameRecord& a, const FrameRecord& b) {
    if (a.video_id != b.video_id) return a.video_id < b.video_id;
    return a.frame_index < b.frame_index;
}

}  // namespace

void normalize(std::span<float> v) {
    double norm2 = 0.0;
    for (float x : v) {
        norm2 += static_cast<double>(x) * x;
    }
    if (!(norm2 > 0.0) || !std::isfinite(norm2)) {
        throw DataError("cannot normalize a zero or non-finite embedding");
    }
    const double inv = 1.0 / std::sqrt(norm2);
    for (float& x : v) {
        x = static_cast<float>(x * inv);
    }
}

Dataset::Dataset(std::uint32_t dimension, std::vector<FrameRecord> frames)
    : dimension_(dimension), frames_(std::move(frames)) {
    std::sort(frames_.begin(), frames_.end(), frame_less);

    std::map<std::string, Shot, std::less<>> shots;
    for (std::size_t i = 0; i < frames_.size(); ++i) {
        auto& f = frames_[i];
        if (i > 0 && frames_[i - 1].video_id == f.video_id &&
            frames_[i - 1].frame_index == f.frame_index) {
            throw DataError("duplicate frame (" + f.video_id + ", " +
                            std::to_string(f.frame_index) + ")");
        }
        std::sort(f.faces.begin(), f.faces.end(),
                  [](const FaceDetection& a, const FaceDetection& b) {
                      return a.face_index < b.face_index;
                  });
        for (std::size_t k = 0; k < f.faces.size(); ++k) {
            const auto& face = f.faces[k];
            if (k > 0 && f.faces[k - 1].face_index == face.face_index) {
                throw DataError("duplicate face index " + std::to_string(face.face_index) +
                                " in frame (" + f.video_id + ", " +
                                std::to_string(f.frame_index) + ")");
            }
            if (face.embedding.size() != dimension_) {
                throw DataError("dimension mismatch in frame (" + f.video_id + ", " +
                                std::to_string(f.frame_index) + "): expected " +
                                std::to_string(dimension_) + ", got " +
                                std::to_string(face.embedding.size()));
            }
            for (float x : face.embedding) {
                if (!std::isfinite(x)) {
                    throw DataError("non-finite embedding value in frame (" + f.video_id +
                                    ", " + std::to_string(f.frame_index) + ")");
                }
            }
        }
        face_count_ += f.faces.size();

        auto [it, inserted] = shots.try_emplace(
            f.shot_id, Shot{f.shot_id, f.video_id, f.frame_index, f.frame_index});
        if (!inserted) {
            Shot& s = it->second;
            if (s.video_id != f.video_id) {
                throw DataError("shot id '" + f.shot_id + "' used in videos '" + s.video_id +
                                "' and '" + f.video_id + "'");
            }
            s.start = std::min(s.start, f.frame_index);
            s.end = std::max(s.end, f.frame_index);
        }
    }

    shots_.reserve(shots.size());
    for (auto& [id, s] : shots) {
        shots_.push_back(std::move(s));
    }
    for (std::size_t i = 0; i < shots_.size(); ++i) {
        shots_by_video_[shots_[i].video_id].push_back(i);
    }
    for (auto& [video, idx] : shots_by_video_) {
        std::sort(idx.begin(), idx.end(), [this](std::size_t a, std::size_t b) {
            return shots_[a].start < shots_[b].start;
        });
        for (std::size_t j = 1; j < idx.size(); ++j) {
            const Shot& prev = shots_[idx[j - 1]];
            const Shot& cur = shots_[idx[j]];
            if (cur.start <= prev.end) {
                throw DataError("shots '" + prev.shot_id + "' and '" + cur.shot_id +
                                "' have overlapping frame ranges in video '" + video + "'");
            }
        }
    }
}

const FrameRecord* Dataset::find_frame(const FrameRef& ref) const {
    auto it = std::lower_bound(frames_.begin(), frames_.end(), ref,
                               [](const FrameRecord& f, const FrameRef& r) {
                                   if (f.video_id != r.video_id) return f.video_id < r.video_id;
                                   return f.frame_index < r.frame_index;
                               });
    if (it == frames_.end() || it->video_id != ref.video_id ||
        it->frame_index != ref.frame_index) {
        return nullptr;
    }
    return &*it;
}

const FrameRecord& Dataset::frame(const FrameRef& ref) const {
    const auto* f = find_frame(ref);
    if (f == nullptr) {
        throw DataError("unknown frame (" + ref.video_id + ", " +
                        std::to_string(ref.frame_index) + ")");
    }
    return *f;
}

const Shot* Dataset::find_shot(const std::string& shot_id) const {
    auto it = std::lower_bound(shots_.begin(), shots_.end(), shot_id,
                               [](const Shot& s, const std::string& id) { return s.shot_id < id; });
    if (it == shots_.end() || it->shot_id != shot_id) return nullptr;
    return &*it;
}

const Shot& Dataset::shot(const std::string& shot_id) const {
    const auto* s = find_shot(shot_id);
    if (s == nullptr) throw DataError("unknown shot '" + shot_id + "'");
    return *s;
}

const std::string& Dataset::shot_of(const FrameRef& ref) const {
    if (find_frame(ref) == nullptr) {
        throw DataError("unknown frame (" + ref.video_id + ", " +
                        std::to_string(ref.frame_index) + ")");
    }
    const auto& idx = shots_by_video_.find(ref.video_id)->second;
    // Last shot starting at or before the frame.
    auto it = std::upper_bound(idx.begin(), idx.end(), ref.frame_index,
                               [this](std::uint32_t fi, std::size_t s) {
                                   return fi < shots_[s].start;
                               });
    const Shot& s = shots_[*std::prev(it)];
    return s.shot_id;
}

Dataset ingest(std::istream& in, std::uint32_t expected_dimension) {
    std::vector<FrameRecord> frames;
    std::uint32_t dim = expected_dimension;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto where = [&] { return "line " + std::to_string(line_no) + ": "; };
        FrameRecord rec;
        try {
            const auto j = nlohmann::json::parse(line);
            rec.video_id = j.at("video").get<std::string>();
            rec.shot_id = j.at("shot").get<std::string>();
            const auto frame = j.at("frame").get<std::int64_t>();
            if (frame < 0 || frame > std::numeric_limits<std::uint32_t>::max()) {
                throw DataError(where() + "frame index out of range");
            }
            rec.frame_index = static_cast<std::uint32_t>(frame);
            for (const auto& jf : j.at("faces")) {
                FaceDetection face;
                const auto k = jf.at("k").get<std::int64_t>();
                if (k < 0 || k > std::numeric_limits<std::uint16_t>::max()) {
                    throw DataError(where() + "face index out of range");
                }
                face.face_index = static_cast<std::uint16_t>(k);
                face.embedding = jf.at("emb").get<std::vector<float>>();
                if (auto id = jf.find("id"); id != jf.end() && !id->is_null()) {
                    face.identity = id->get<std::string>();
                }
                if (dim == 0) dim = static_cast<std::uint32_t>(face.embedding.size());
                if (face.embedding.size() != dim || dim == 0) {
                    throw DataError(where() + "dimension mismatch: expected " +
                                    std::to_string(dim) + ", got " +
                                    std::to_string(face.embedding.size()));
                }
                for (float x : face.embedding) {
                    if (!std::isfinite(x)) throw DataError(where() + "non-finite embedding value");
                }
                normalize(face.embedding);
                rec.faces.push_back(std::move(face));
            }
        } catch (const nlohmann::json::exception& e) {
            throw DataError(where() + "malformed record: " + e.what());
        } catch (const DataError& e) {
            const std::string msg = e.what();
            if (msg.rfind("line ", 0) == 0) throw;
            throw DataError(where() + msg);
        }
        frames.push_back(std::move(rec));
    }
    return Dataset(dim, std::move(frames));
}

Dataset ingest(const std::filesystem::path& path, std::uint32_t expected_dimension) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset file " + path.string());
    return ingest(in, expected_dimension);
}

void write_dataset_text(const Dataset& dataset, std::ostream& out) {
    for (const auto& f : dataset.frames()) {
        nlohmann::ordered_json j;
        j["video"] = f.video_id;
        j["shot"] = f.shot_id;
        j["frame"] = f.frame_index;
        auto faces = nlohmann::ordered_json::array();
        for (const auto& face : f.faces) {
            nlohmann::ordered_json jf;
            jf["k"] = face.face_index;
            jf["emb"] = face.embedding;
            if (face.identity) jf["id"] = *face.identity;
            faces.push_back(std::move(jf));
        }
        j["faces"] = std::move(faces);
        out << j.dump() << '\n';
    }
}

void write_dataset_text(const Dataset& dataset, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    write_dataset_text(dataset, out);
}

void save(const Dataset& dataset, std::ostream& out) {
    using namespace detail;
    out.write("TDSB", 4);
    write_le(out, kDatasetFormatVersion);
    write_le(out, dataset.dimension());
    write_le(out, static_cast<std::uint64_t>(dataset.frames().size()));
    for (const auto& f : dataset.frames()) {
        write_string(out, f.video_id);
        write_string(out, f.shot_id);
        write_le(out, f.frame_index);
        write_le(out, static_cast<std::uint32_t>(f.faces.size()));
        for (const auto& face : f.faces) {
            write_le(out, face.face_index);
            write_le(out, static_cast<std::uint8_t>(face.identity ? 1 : 0));
            if (face.identity) write_string(out, *face.identity);
            for (float x : face.embedding) write_f32(out, x);
        }
    }
}

void save(const Dataset& dataset, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    save(dataset, out);
}

Dataset load(std::istream& in) {
    using namespace detail;
    expect_magic(in, "TDSB", "dataset");
    const auto version = read_le<std::uint32_t>(in);
    if (version != kDatasetFormatVersion) {
        throw DataError("unsupported dataset format version " + std::to_string(version));
    }
    const auto dim = read_le<std::uint32_t>(in);
    const auto n = read_le<std::uint64_t>(in);
    std::vector<FrameRecord> frames;
    for (std::uint64_t i = 0; i < n; ++i) {
        FrameRecord f;
        f.video_id = read_string(in);
        f.shot_id = read_string(in);
        f.frame_index = read_le<std::uint32_t>(in);
        const auto nf = read_le<std::uint32_t>(in);
        for (std::uint32_t k = 0; k < nf; ++k) {
            FaceDetection face;
            face.face_index = read_le<std::uint16_t>(in);
            if (read_le<std::uint8_t>(in) != 0) face.identity = read_string(in);
            face.embedding.resize(dim);
            for (auto& x : face.embedding) x = read_f32(in);
            f.faces.push_back(std::move(face));
        }
        frames.push_back(std::move(f));
    }
    return Dataset(dim, std::move(frames));
}

Dataset load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    return load(in);
}

}  // namespace tins
