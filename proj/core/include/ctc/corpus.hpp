#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ctc/tensor.hpp"

namespace ctc {

struct Record {
    std::string label;
    std::string text;
    Extent length = 0;  // characters (code points), not bytes
};

// UTF-8 <-> code points; malformed byte sequences raise data_error.
std::vector<std::uint32_t> utf8_codepoints(std::string_view text);
std::string utf8_encode(std::uint32_t cp);
Extent utf8_length(std::string_view text);

struct LoadReport {
    std::vector<Record> records;
    Extent malformed = 0;  // lines skipped (no TAB, empty field, bad UTF-8)
};

// Reads newline-delimited `label<TAB>text`. Malformed lines are counted, not
// fatal; an unreadable file or zero well-formed lines raises data_error.
LoadReport load_corpus(const std::string& path);

// Length filter plus the short/long split:
//   kept (bucket 1): 10 <= len <= 5000
//   bucket 2 (short): 10 <= len <= 500; bucket 3 (long): 500 < len <= 5000
struct BucketReport {
    std::vector<Record> bucket1, bucket2, bucket3;
    Extent dropped_short = 0;  // len < 10
    Extent dropped_long = 0;   // len > 5000
};
BucketReport filter_and_bucket(const std::vector<Record>& records);
bool bucket_keeps(int bucket, Extent length);  // bucket in {1,2,3}

// key-value summary: bounds, per-class counts, drop report
std::string bucket_manifest(const BucketReport& report);

// Character table with reserved ids 0 = PAD and 1 = UNK; remaining characters
// ordered by descending frequency, ties by ascending code point.
class Vocab {
  public:
    static Vocab build(const std::vector<Record>& records, Extent min_freq);

    Extent size() const { return static_cast<Extent>(chars_.size()) + 2; }
    int id_of(std::uint32_t cp) const;          // UNK id (1) when absent
    std::uint32_t codepoint_at(int id) const;   // ids >= 2 only
    std::string decode(const std::vector<int>& ids) const;  // PAD skipped, UNK -> U+FFFD

    // file format: line number = id; first two lines literally <PAD> and <UNK>
    std::string serialize() const;
    void save(const std::string& path) const;
    static Vocab load(const std::string& path);
    static Vocab parse(std::string_view content);

    std::uint64_t digest() const;  // fnv1a64 of serialize()

  private:
    std::vector<std::uint32_t> chars_;  // index i holds the character with id i+2
    std::unordered_map<std::uint32_t, int> index_;
};

// Stable label <-> index table (labels sorted lexicographically).
class LabelTable {
  public:
    LabelTable() = default;
    static LabelTable build(const std::vector<Record>& records);
    explicit LabelTable(std::vector<std::string> names);

    int id_of(const std::string& label) const;  // data_error when unknown
    const std::string& name(int id) const;
    Extent size() const { return static_cast<Extent>(names_.size()); }
    const std::vector<std::string>& names() const { return names_; }

  private:
    std::vector<std::string> names_;
    std::unordered_map<std::string, int> index_;
};

struct EncodedBatch {
    std::vector<std::vector<int>> ids;  // [B][T], every row padded to the same T
    std::vector<int> labels;
    std::vector<Extent> lengths;  // pre-truncation character counts
};

// Unknown characters map to UNK, records are truncated at cap characters and
// right-padded with PAD; every row comes back with exactly `cap` ids.
std::vector<int> encode_text(std::string_view text, const Vocab& vocab, Extent cap);
EncodedBatch encode_batch(const std::vector<Record>& records, const Vocab& vocab,
                          const LabelTable& labels, Extent cap);

// Per-class deterministic split. Every class needs >= 2 records; both sides
// get at least one record per class. train_cap > 0 truncates each class's
// train side to that many records after the split.
std::pair<std::vector<Record>, std::vector<Record>> split_stratified(
    const std::vector<Record>& records, double test_fraction, std::uint64_t seed,
    Extent train_cap = 0);

// Synthetic corpus with two planted signal families. Every record carries a
// small set of fixed marker characters at spread-out positions; in the
// "order" family their left-to-right order encodes the class, in the
// "trigram" family the order is random noise and a class-specific contiguous
// trigram is planted instead. Marker presence is therefore uninformative:
// only short local patterns (trigram) or long-range order carries label
// signal.
struct SynthConfig {
    Extent classes = 5;
    Extent per_class = 500;
    Extent len_lo = 80;
    Extent len_hi = 120;
    double order_fraction = 0.5;  // share of records that carry the order cue
    bool both_cues = false;       // plant both families in every record
    std::uint64_t seed = 1;
};
std::vector<Record> make_synthetic(const SynthConfig& config);

std::string format_corpus(const std::vector<Record>& records);  // label<TAB>text lines
void save_corpus(const std::vector<Record>& records, const std::string& path);

}  // namespace ctc
