#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "nucleo/image.hpp"

namespace nucleo {

struct DatasetError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct MalformedRow : DatasetError {
    int line;
    MalformedRow(int line_no, const std::string& why)
        : DatasetError("malformed label row at line " + std::to_string(line_no) +
                       ": " + why),
          line(line_no) {}
};
struct DuplicateFrameId : DatasetError {
    explicit DuplicateFrameId(const std::string& id)
        : DatasetError("duplicate frame id: " + id) {}
};
struct MissingPointFile : DatasetError {
    explicit MissingPointFile(const std::string& id)
        : DatasetError("missing point file for " + id) {}
};
struct PointOutOfBounds : DatasetError {
    PointOutOfBounds(const std::string& id, int index)
        : DatasetError("point " + std::to_string(index) + " of " + id +
                       " lies outside the frame") {}
};

enum class Grade { Negative, LSIL, HSIL };
enum class Split { Train, Test };

char grade_letter(Grade g);
const char* grade_name(Grade g);
const char* split_name(Split s);

struct Point {
    int x = 0;  // column
    int y = 0;  // row
    friend bool operator==(const Point&, const Point&) = default;
};

struct LabelRecord {
    std::string frame_id;
    Grade grade = Grade::Negative;
    Split split = Split::Train;
    friend bool operator==(const LabelRecord&, const LabelRecord&) = default;
};

// One row per frame: "frame007,L,0". A leading header row is skipped when its
// fields do not parse as data. Split digit 0 = training, 1 = test.
std::vector<LabelRecord> parse_labels(const std::string& path);
std::vector<LabelRecord> parse_labels_text(const std::string& text);
std::string serialize_labels(const std::vector<LabelRecord>& records);

struct FrameRecord {
    std::string frame_id;  // frame000 .. frame092
    Grade grade = Grade::Negative;
    Split split = Split::Train;
    GrayImage edf_image;
    std::vector<Point> gt_points;
};

struct GroundTruthSet {
    std::vector<FrameRecord> frames;

    const FrameRecord* find(const std::string& frame_id) const;
    long long total_points() const;
};

// Canonical on-disk layout:
//   <root>/label.csv            (or labels.csv)
//   <root>/EDF/frame000.png     (or edf/, or flat at root; .png/.bmp/.pgm)
//   <root>/points/frame000.csv  (or gt/, annotations/; rows "x,y", header ok)
struct DatasetPaths {
    std::string labels_file;
    std::string edf_dir;
    std::string points_dir;
};
DatasetPaths resolve_dataset_layout(const std::string& root);

// Builds FrameRecords from parsed labels: loads each EDF image, reads the
// per-frame point file, and checks every point against the image bounds.
GroundTruthSet load_ground_truth(const std::string& points_dir,
                                 const std::vector<LabelRecord>& labels,
                                 const std::string& edf_dir);

GroundTruthSet load_dataset(const std::string& root);

// Reads one per-frame point file ("x,y" integer rows, optional header,
// whitespace tolerated).
std::vector<Point> parse_points_file(const std::string& path);

// Grade-by-split count table reproducing the dataset's summary layout.
struct SummaryTable {
    // rows: [train, test, total]; cols: [Negative, LSIL, HSIL, total]
    std::array<std::array<long long, 4>, 3> frames{};
    std::array<std::array<long long, 4>, 3> points{};

    std::string to_csv() const;
    bool matches_published_counts() const;
};

SummaryTable dataset_summary(const GroundTruthSet& gt);

}  // namespace nucleo
