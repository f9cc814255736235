#include "ctc/corpus.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "ctc/errors.hpp"
#include "ctc/util.hpp"

namespace ctc {

std::vector<std::uint32_t> utf8_codepoints(std::string_view text) {
    std::vector<std::uint32_t> out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        const unsigned char c = static_cast<unsigned char>(text[i]);
        std::uint32_t cp = 0;
        int extra = 0;
        if (c < 0x80) {
            cp = c;
        } else if ((c >> 5) == 0x6) {
            cp = c & 0x1fu;
            extra = 1;
        } else if ((c >> 4) == 0xe) {
            cp = c & 0x0fu;
            extra = 2;
        } else if ((c >> 3) == 0x1e) {
            cp = c & 0x07u;
            extra = 3;
        } else {
            throw data_error("invalid UTF-8 lead byte at offset " + std::to_string(i));
        }
        if (i + static_cast<std::size_t>(extra) >= text.size()) {
            throw data_error("truncated UTF-8 sequence at offset " + std::to_string(i));
        }
        for (int k = 1; k <= extra; ++k) {
            const unsigned char cc = static_cast<unsigned char>(text[i + k]);
            if ((cc >> 6) != 0x2) {
                throw data_error("invalid UTF-8 continuation at offset " + std::to_string(i + k));
            }
            cp = (cp << 6) | (cc & 0x3fu);
        }
        static constexpr std::uint32_t min_cp[4] = {0, 0x80, 0x800, 0x10000};
        if (cp < min_cp[extra] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
            throw data_error("invalid code point at offset " + std::to_string(i));
        }
        out.push_back(cp);
        i += static_cast<std::size_t>(extra) + 1;
    }
    return out;
}

std::string utf8_encode(std::uint32_t cp) {
    std::string out;
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xc0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xe0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    } else {
        out.push_back(static_cast<char>(0xf0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    }
    return out;
}

Extent utf8_length(std::string_view text) {
    return static_cast<Extent>(utf8_codepoints(text).size());
}

LoadReport load_corpus(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot read corpus file: " + path);
    LoadReport report;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::size_t tab = line.find('\t');
        if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size() ||
            line.find('\t', tab + 1) != std::string::npos) {
            ++report.malformed;
            continue;
        }
        Record rec;
        rec.label = line.substr(0, tab);
        rec.text = line.substr(tab + 1);
        try {
            (void)utf8_length(rec.label);
            rec.length = utf8_length(rec.text);
        } catch (const data_error&) {
            ++report.malformed;
            continue;
        }
        report.records.push_back(std::move(rec));
    }
    if (report.records.empty()) {
        throw data_error("no well-formed records in " + path + " (" +
                         std::to_string(report.malformed) + " malformed lines)");
    }
    return report;
}

bool bucket_keeps(int bucket, Extent length) {
    switch (bucket) {
        case 1: return length >= 10 && length <= 5000;
        case 2: return length >= 10 && length <= 500;
        case 3: return length > 500 && length <= 5000;
        default: throw std::invalid_argument("bucket must be 1, 2 or 3");
    }
}

BucketReport filter_and_bucket(const std::vector<Record>& records) {
    BucketReport report;
    for (const auto& rec : records) {
        if (rec.length < 10) {
            ++report.dropped_short;
            continue;
        }
        if (rec.length > 5000) {
            ++report.dropped_long;
            continue;
        }
        report.bucket1.push_back(rec);
        if (rec.length <= 500) {
            report.bucket2.push_back(rec);
        } else {
            report.bucket3.push_back(rec);
        }
    }
    return report;
}

std::string bucket_manifest(const BucketReport& report) {
    std::ostringstream os;
    auto section = [&os](const char* name, const std::vector<Record>& recs, Extent lo, Extent hi) {
        os << name << ".min_len=" << lo << "\n" << name << ".max_len=" << hi << "\n"
           << name << ".count=" << recs.size() << "\n";
        std::map<std::string, Extent> per_class;
        for (const auto& r : recs) ++per_class[r.label];
        for (const auto& [label, count] : per_class) {
            os << name << ".class." << label << "=" << count << "\n";
        }
    };
    section("bucket1", report.bucket1, 10, 5000);
    section("bucket2", report.bucket2, 10, 500);
    section("bucket3", report.bucket3, 501, 5000);
    os << "dropped.short=" << report.dropped_short << "\n"
       << "dropped.long=" << report.dropped_long << "\n"
       << "total.input="
       << report.bucket1.size() + static_cast<std::size_t>(report.dropped_short) +
              static_cast<std::size_t>(report.dropped_long)
       << "\n";
    return os.str();
}

Vocab Vocab::build(const std::vector<Record>& records, Extent min_freq) {
    if (records.empty()) throw data_error("vocab: empty record set");
    if (min_freq < 1) throw std::invalid_argument("vocab: min_freq must be >= 1");
    std::unordered_map<std::uint32_t, Extent> counts;
    for (const auto& rec : records) {
        for (std::uint32_t cp : utf8_codepoints(rec.text)) ++counts[cp];
    }
    std::vector<std::pair<std::uint32_t, Extent>> kept;
    kept.reserve(counts.size());
    for (const auto& [cp, n] : counts) {
        if (n >= min_freq) kept.emplace_back(cp, n);
    }
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    Vocab vocab;
    vocab.chars_.reserve(kept.size());
    for (const auto& [cp, n] : kept) {
        vocab.index_.emplace(cp, static_cast<int>(vocab.chars_.size()) + 2);
        vocab.chars_.push_back(cp);
    }
    return vocab;
}

int Vocab::id_of(std::uint32_t cp) const {
    auto it = index_.find(cp);
    return it == index_.end() ? 1 : it->second;
}

std::uint32_t Vocab::codepoint_at(int id) const {
    if (id < 2 || id >= size()) {
        throw std::invalid_argument("vocab: no character at id " + std::to_string(id));
    }
    return chars_[static_cast<std::size_t>(id - 2)];
}

std::string Vocab::decode(const std::vector<int>& ids) const {
    std::string out;
    for (int id : ids) {
        if (id == 0) continue;                       // PAD
        if (id == 1) out += utf8_encode(0xFFFD);     // UNK
        else out += utf8_encode(codepoint_at(id));
    }
    return out;
}

std::string Vocab::serialize() const {
    std::string out = "<PAD>\n<UNK>\n";
    for (std::uint32_t cp : chars_) {
        out += utf8_encode(cp);
        out += '\n';
    }
    return out;
}

void Vocab::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error("cannot write vocab file: " + path);
    out << serialize();
    if (!out) throw data_error("failed writing vocab file: " + path);
}

Vocab Vocab::parse(std::string_view content) {
    Vocab vocab;
    std::size_t pos = 0;
    int line_no = 0;
    while (pos <= content.size()) {
        const std::size_t nl = content.find('\n', pos);
        std::string_view line =
            nl == std::string_view::npos ? content.substr(pos) : content.substr(pos, nl - pos);
        if (nl == std::string_view::npos && line.empty()) break;
        if (line_no == 0) {
            if (line != "<PAD>") throw data_error("vocab file: first line must be <PAD>");
        } else if (line_no == 1) {
            if (line != "<UNK>") throw data_error("vocab file: second line must be <UNK>");
        } else {
            auto cps = utf8_codepoints(line);
            if (cps.size() != 1) {
                throw data_error("vocab file: line " + std::to_string(line_no + 1) +
                                 " must hold exactly one character");
            }
            if (!vocab.index_.emplace(cps[0], static_cast<int>(vocab.chars_.size()) + 2).second) {
                throw data_error("vocab file: duplicate character at line " +
                                 std::to_string(line_no + 1));
            }
            vocab.chars_.push_back(cps[0]);
        }
        ++line_no;
        if (nl == std::string_view::npos) break;
        pos = nl + 1;
    }
    if (line_no < 2) throw data_error("vocab file: missing <PAD>/<UNK> header");
    return vocab;
}

Vocab Vocab::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("cannot read vocab file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

std::uint64_t Vocab::digest() const { return fnv1a64(serialize()); }

LabelTable LabelTable::build(const std::vector<Record>& records) {
    std::vector<std::string> names;
    for (const auto& rec : records) names.push_back(rec.label);
    std::sort(names.begin(), names.end());
    names.erase(std::unique(names.begin(), names.end()), names.end());
    return LabelTable(std::move(names));
}

LabelTable::LabelTable(std::vector<std::string> names) : names_(std::move(names)) {
    for (std::size_t i = 0; i < names_.size(); ++i) {
        index_.emplace(names_[i], static_cast<int>(i));
    }
}

int LabelTable::id_of(const std::string& label) const {
    auto it = index_.find(label);
    if (it == index_.end()) throw data_error("unknown label: " + label);
    return it->second;
}

const std::string& LabelTable::name(int id) const {
    if (id < 0 || id >= size()) {
        throw std::invalid_argument("label id " + std::to_string(id) + " outside table");
    }
    return names_[static_cast<std::size_t>(id)];
}

std::vector<int> encode_text(std::string_view text, const Vocab& vocab, Extent cap) {
    if (cap < 1) throw std::invalid_argument("encode: cap must be >= 1");
    std::vector<int> ids;
    ids.reserve(static_cast<std::size_t>(cap));
    for (std::uint32_t cp : utf8_codepoints(text)) {
        if (static_cast<Extent>(ids.size()) == cap) break;
        ids.push_back(vocab.id_of(cp));
    }
    ids.resize(static_cast<std::size_t>(cap), 0);
    return ids;
}

EncodedBatch encode_batch(const std::vector<Record>& records, const Vocab& vocab,
                          const LabelTable& labels, Extent cap) {
    EncodedBatch batch;
    batch.ids.reserve(records.size());
    batch.labels.reserve(records.size());
    batch.lengths.reserve(records.size());
    for (const auto& rec : records) {
        batch.ids.push_back(encode_text(rec.text, vocab, cap));
        batch.labels.push_back(labels.id_of(rec.label));
        batch.lengths.push_back(rec.length);
    }
    return batch;
}

namespace {

// deterministic Fisher-Yates; std::shuffle's output is implementation-defined
template <typename T>
void seeded_shuffle(std::vector<T>& items, std::uint64_t seed) {
    std::uint64_t state = seed;
    for (std::size_t i = items.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(splitmix64(state) % i);
        std::swap(items[i - 1], items[j]);
    }
}

}  // namespace

std::pair<std::vector<Record>, std::vector<Record>> split_stratified(
    const std::vector<Record>& records, double test_fraction, std::uint64_t seed,
    Extent train_cap) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw std::invalid_argument("split: test_fraction must be in (0,1)");
    }
    std::map<std::string, std::vector<const Record*>> groups;
    for (const auto& rec : records) groups[rec.label].push_back(&rec);

    std::vector<Record> train, test;
    for (auto& [label, group] : groups) {
        if (group.size() < 2) {
            throw data_error("split: class '" + label + "' has fewer than 2 records");
        }
        seeded_shuffle(group, derive_seed(seed, label));
        const auto n = static_cast<Extent>(group.size());
        Extent n_test = static_cast<Extent>(
            std::llround(test_fraction * static_cast<double>(n)));
        n_test = std::max<Extent>(1, std::min<Extent>(n_test, n - 1));
        for (Extent i = 0; i < n; ++i) {
            if (i < n_test) {
                test.push_back(*group[static_cast<std::size_t>(i)]);
            } else if (train_cap <= 0 ||
                       static_cast<Extent>(i - n_test) < train_cap) {
                train.push_back(*group[static_cast<std::size_t>(i)]);
            }
        }
    }
    return {std::move(train), std::move(test)};
}

namespace {

constexpr std::uint32_t kNoiseBase = 0x4E00;  // CJK block start
constexpr Extent kNoiseSize = 60;
// marker pool lives outside the noise range
constexpr std::array<std::uint32_t, 5> kMarkers = {0x5929, 0x5730, 0x4EBA, 0x65E5, 0x6708};

Extent factorial(Extent n) {
    Extent f = 1;
    for (Extent i = 2; i <= n; ++i) f *= i;
    return f;
}

// Lehmer decode: index -> permutation of {0..k-1}
std::vector<Extent> nth_permutation(Extent index, Extent k) {
    std::vector<Extent> pool(static_cast<std::size_t>(k));
    for (Extent i = 0; i < k; ++i) pool[static_cast<std::size_t>(i)] = i;
    std::vector<Extent> perm;
    for (Extent i = k; i >= 1; --i) {
        const Extent f = factorial(i - 1);
        const Extent digit = index / f;
        index %= f;
        perm.push_back(pool[static_cast<std::size_t>(digit)]);
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(digit));
    }
    return perm;
}

std::array<std::uint32_t, 3> class_trigram(Extent cls) {
    return {kNoiseBase + static_cast<std::uint32_t>((7 * cls + 1) % kNoiseSize),
            kNoiseBase + static_cast<std::uint32_t>((7 * cls + 3) % kNoiseSize),
            kNoiseBase + static_cast<std::uint32_t>((7 * cls + 5) % kNoiseSize)};
}

}  // namespace

std::vector<Record> make_synthetic(const SynthConfig& config) {
    if (config.classes < 2) throw std::invalid_argument("synth: need at least 2 classes");
    if (config.per_class < 1) throw std::invalid_argument("synth: per_class must be >= 1");
    if (config.len_hi < config.len_lo) throw std::invalid_argument("synth: len_hi < len_lo");
    if (!(config.order_fraction >= 0.0 && config.order_fraction <= 1.0)) {
        throw std::invalid_argument("synth: order_fraction must be in [0,1]");
    }
    Extent markers = 3;
    while (factorial(markers) < config.classes && markers < static_cast<Extent>(kMarkers.size()))
        ++markers;
    if (factorial(markers) < config.classes) {
        throw std::invalid_argument("synth: too many classes for the order cue (max 120)");
    }
    if (config.len_lo < 8 * (markers + 1)) {
        throw std::invalid_argument("synth: len_lo too small for " + std::to_string(markers) +
                                    " spread markers");
    }

    std::uint64_t state = config.seed;
    auto next = [&state]() { return splitmix64(state); };
    auto next_unit = [&next]() { return static_cast<double>(next() >> 11) * 0x1.0p-53; };

    std::vector<Record> out;
    out.reserve(static_cast<std::size_t>(config.classes * config.per_class));
    for (Extent cls = 0; cls < config.classes; ++cls) {
        const auto trigram = class_trigram(cls);
        for (Extent i = 0; i < config.per_class; ++i) {
            const Extent len =
                config.len_lo +
                static_cast<Extent>(next() % static_cast<std::uint64_t>(
                                                 config.len_hi - config.len_lo + 1));
            std::vector<std::uint32_t> cps(static_cast<std::size_t>(len));
            for (auto& cp : cps) {
                cp = kNoiseBase + static_cast<std::uint32_t>(next() % kNoiseSize);
            }

            const bool order_cue = config.both_cues || next_unit() < config.order_fraction;
            const bool trigram_cue = config.both_cues || !order_cue;

            // markers at spread positions; order carries the class only for
            // the order family, otherwise it is re-rolled noise
            const Extent perm_index =
                order_cue ? cls % factorial(markers)
                          : static_cast<Extent>(next() %
                                                static_cast<std::uint64_t>(factorial(markers)));
            const auto perm = nth_permutation(perm_index, markers);
            std::vector<Extent> positions;
            const Extent gap = len / (markers + 1);
            const Extent jitter = gap / 4;
            for (Extent m = 0; m < markers; ++m) {
                Extent p = gap * (m + 1);
                if (jitter > 0) {
                    p += static_cast<Extent>(next() % static_cast<std::uint64_t>(2 * jitter + 1)) -
                         jitter;
                }
                positions.push_back(p);
            }
            for (Extent m = 0; m < markers; ++m) {
                cps[static_cast<std::size_t>(positions[static_cast<std::size_t>(m)])] =
                    kMarkers[static_cast<std::size_t>(perm[static_cast<std::size_t>(m)])];
            }

            if (trigram_cue) {
                Extent start = 0;
                for (int attempt = 0; attempt < 200; ++attempt) {
                    start = static_cast<Extent>(next() %
                                                static_cast<std::uint64_t>(len - 2));
                    bool clash = false;
                    for (Extent p : positions) {
                        if (p >= start - 1 && p <= start + 3) clash = true;
                    }
                    if (!clash) break;
                }
                for (int k = 0; k < 3; ++k) {
                    cps[static_cast<std::size_t>(start + k)] =
                        trigram[static_cast<std::size_t>(k)];
                }
            }

            Record rec;
            rec.label = "c" + std::string(cls < 10 ? "0" : "") + std::to_string(cls);
            for (std::uint32_t cp : cps) rec.text += utf8_encode(cp);
            rec.length = len;
            out.push_back(std::move(rec));
        }
    }
    return out;
}

std::string format_corpus(const std::vector<Record>& records) {
    std::string out;
    for (const auto& rec : records) {
        out += rec.label;
        out += '\t';
        out += rec.text;
        out += '\n';
    }
    return out;
}

void save_corpus(const std::vector<Record>& records, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error("cannot write corpus file: " + path);
    out << format_corpus(records);
    if (!out) throw data_error("failed writing corpus file: " + path);
}

}  // namespace ctc
