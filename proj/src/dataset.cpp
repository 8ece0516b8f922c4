#include "nucleo/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <optional>
#include <set>
#include <sstream>

#include "nucleo/csv.hpp"

namespace fs = std::filesystem;

namespace nucleo {

char grade_letter(Grade g) {
    switch (g) {
        case Grade::Negative: return 'N';
        case Grade::LSIL: return 'L';
        case Grade::HSIL: return 'H';
    }
    return '?';
}

const char* grade_name(Grade g) {
    switch (g) {
        case Grade::Negative: return "negative";
        case Grade::LSIL: return "lsil";
        case Grade::HSIL: return "hsil";
    }
    return "?";
}

const char* split_name(Split s) { return s == Split::Train ? "train" : "test"; }

namespace {

bool is_frame_id(const std::string& s) {
    if (s.size() != 8 || s.compare(0, 5, "frame") != 0) return false;
    return std::isdigit(static_cast<unsigned char>(s[5])) &&
           std::isdigit(static_cast<unsigned char>(s[6])) &&
           std::isdigit(static_cast<unsigned char>(s[7]));
}

std::optional<Grade> parse_grade(const std::string& s) {
    if (s == "N") return Grade::Negative;
    if (s == "L") return Grade::LSIL;
    if (s == "H") return Grade::HSIL;
    return std::nullopt;
}

std::optional<LabelRecord> try_parse_label_row(const std::vector<std::string>& fields) {
    if (fields.size() != 3) return std::nullopt;
    if (!is_frame_id(fields[0])) return std::nullopt;
    auto grade = parse_grade(fields[1]);
    if (!grade) return std::nullopt;
    if (fields[2] != "0" && fields[2] != "1") return std::nullopt;
    return LabelRecord{fields[0], *grade,
                       fields[2] == "0" ? Split::Train : Split::Test};
}

}  // namespace

std::vector<LabelRecord> parse_labels_text(const std::string& text) {
    std::vector<LabelRecord> records;
    std::set<std::string> seen;
    auto lines = split_lines(text);
    bool first_data_line = true;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        auto rec = try_parse_label_row(split_csv_line(lines[i]));
        if (!rec) {
            if (first_data_line) {  // header row
                first_data_line = false;
                continue;
            }
            throw MalformedRow(static_cast<int>(i + 1),
                               "expected \"frameNNN,<N|L|H>,<0|1>\"");
        }
        first_data_line = false;
        if (!seen.insert(rec->frame_id).second) throw DuplicateFrameId(rec->frame_id);
        records.push_back(*rec);
    }
    return records;
}

std::vector<LabelRecord> parse_labels(const std::string& path) {
    return parse_labels_text(read_text_file(path));
}

std::string serialize_labels(const std::vector<LabelRecord>& records) {
    std::string out;
    for (const auto& r : records) {
        out += r.frame_id;
        out += ',';
        out += grade_letter(r.grade);
        out += ',';
        out += (r.split == Split::Train) ? '0' : '1';
        out += '\n';
    }
    return out;
}

const FrameRecord* GroundTruthSet::find(const std::string& frame_id) const {
    for (const auto& f : frames)
        if (f.frame_id == frame_id) return &f;
    return nullptr;
}

long long GroundTruthSet::total_points() const {
    long long n = 0;
    for (const auto& f : frames) n += static_cast<long long>(f.gt_points.size());
    return n;
}

std::vector<Point> parse_points_file(const std::string& path) {
    std::vector<Point> points;
    auto lines = split_lines(read_text_file(path));
    bool first = true;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        std::string line = trim(lines[i]);
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() == 1) {
            // tolerate whitespace-separated rows
            std::istringstream ss(line);
            std::string a, b;
            if (ss >> a >> b) fields = {a, b};
        }
        bool ok = fields.size() == 2;
        long x = 0, y = 0;
        if (ok) {
            try {
                std::size_t px = 0, py = 0;
                x = std::stol(fields[0], &px);
                y = std::stol(fields[1], &py);
                ok = px == fields[0].size() && py == fields[1].size();
            } catch (const std::exception&) {
                ok = false;
            }
        }
        if (!ok) {
            if (first) {  // header row
                first = false;
                continue;
            }
            throw DatasetError("malformed point row at " + path + ":" +
                               std::to_string(i + 1));
        }
        first = false;
        points.push_back(Point{static_cast<int>(x), static_cast<int>(y)});
    }
    return points;
}

namespace {

std::string find_existing(const std::vector<std::string>& candidates) {
    for (const auto& c : candidates)
        if (fs::exists(c)) return c;
    return "";
}

std::string find_frame_image(const std::string& edf_dir, const std::string& frame_id) {
    static const char* exts[] = {".png", ".PNG", ".bmp", ".BMP", ".pgm", ".ppm"};
    for (const char* ext : exts) {
        fs::path p = fs::path(edf_dir) / (frame_id + ext);
        if (fs::exists(p)) return p.string();
    }
    return "";
}

std::string find_points_file(const std::string& points_dir, const std::string& frame_id) {
    static const char* exts[] = {".csv", ".txt", ".pts"};
    for (const char* ext : exts) {
        fs::path p = fs::path(points_dir) / (frame_id + ext);
        if (fs::exists(p)) return p.string();
    }
    return "";
}

}  // namespace

DatasetPaths resolve_dataset_layout(const std::string& root) {
    DatasetPaths paths;
    paths.labels_file = find_existing({(fs::path(root) / "label.csv").string(),
                                       (fs::path(root) / "labels.csv").string()});
    if (paths.labels_file.empty())
        throw DatasetError("no label.csv or labels.csv under " + root);

    paths.edf_dir = find_existing({(fs::path(root) / "EDF").string(),
                                   (fs::path(root) / "edf").string(), root});
    paths.points_dir = find_existing({(fs::path(root) / "points").string(),
                                      (fs::path(root) / "gt").string(),
                                      (fs::path(root) / "annotations").string(), root});
    return paths;
}

GroundTruthSet load_ground_truth(const std::string& points_dir,
                                 const std::vector<LabelRecord>& labels,
                                 const std::string& edf_dir) {
    GroundTruthSet gt;
    gt.frames.reserve(labels.size());
    for (const auto& rec : labels) {
        if (!is_frame_id(rec.frame_id))
            throw DatasetError("invalid frame id: " + rec.frame_id);
        int num = std::stoi(rec.frame_id.substr(5));
        if (num > 92)
            throw DatasetError("frame id out of range (frame000-frame092): " +
                               rec.frame_id);

        FrameRecord frame;
        frame.frame_id = rec.frame_id;
        frame.grade = rec.grade;
        frame.split = rec.split;

        std::string img_path = find_frame_image(edf_dir, rec.frame_id);
        if (img_path.empty())
            throw DatasetError("no EDF image for " + rec.frame_id + " under " + edf_dir);
        frame.edf_image = load_frame(img_path);

        std::string pts_path = find_points_file(points_dir, rec.frame_id);
        if (pts_path.empty()) throw MissingPointFile(rec.frame_id);
        frame.gt_points = parse_points_file(pts_path);
        for (std::size_t i = 0; i < frame.gt_points.size(); ++i) {
            const Point& p = frame.gt_points[i];
            if (!frame.edf_image.contains(p.x, p.y))
                throw PointOutOfBounds(rec.frame_id, static_cast<int>(i));
        }
        gt.frames.push_back(std::move(frame));
    }
    return gt;
}

GroundTruthSet load_dataset(const std::string& root) {
    DatasetPaths paths = resolve_dataset_layout(root);
    auto labels = parse_labels(paths.labels_file);
    return load_ground_truth(paths.points_dir, labels, paths.edf_dir);
}

SummaryTable dataset_summary(const GroundTruthSet& gt) {
    SummaryTable t;
    for (const auto& f : gt.frames) {
        int row = f.split == Split::Train ? 0 : 1;
        int col = static_cast<int>(f.grade);
        long long pts = static_cast<long long>(f.gt_points.size());
        for (int r : {row, 2}) {
            for (int c : {col, 3}) {
                t.frames[r][c] += 1;
                t.points[r][c] += pts;
            }
        }
    }
    return t;
}

std::string SummaryTable::to_csv() const {
    static const char* row_names[] = {"train", "test", "total"};
    std::ostringstream out;
    out << "section,negative,lsil,hsil,total\n";
    for (int r = 0; r < 3; ++r) {
        out << "frames_" << row_names[r];
        for (int c = 0; c < 4; ++c) out << ',' << frames[r][c];
        out << '\n';
    }
    for (int r = 0; r < 3; ++r) {
        out << "points_" << row_names[r];
        for (int c = 0; c < 4; ++c) out << ',' << points[r][c];
        out << '\n';
    }
    return out.str();
}

bool SummaryTable::matches_published_counts() const {
    const std::array<std::array<long long, 4>, 3> want_frames = {{
        {12, 34, 23, 69},
        {4, 12, 8, 24},
        {16, 46, 31, 93},
    }};
    const std::array<std::array<long long, 4>, 3> want_points = {{
        {179, 1125, 679, 1983},
        {59, 411, 252, 722},
        {238, 1536, 931, 2705},
    }};
    return frames == want_frames && points == want_points;
}

}  // namespace nucleo
