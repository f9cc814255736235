#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ctc/corpus.hpp"
#include "ctc/errors.hpp"
#include "ctc/util.hpp"
#include "doctest.h"

using ctc::Extent;
using ctc::Record;

namespace {

ctc::Record make_record(std::string label, std::string text) {
    ctc::Record rec;
    rec.label = std::move(label);
    rec.text = std::move(text);
    rec.length = ctc::utf8_length(rec.text);
    return rec;
}

struct scratch_file {
    std::filesystem::path path;
    scratch_file(const std::string& name, const std::string& content) {
        path = std::filesystem::temp_directory_path() / name;
        std::ofstream out(path, std::ios::binary);
        out << content;
    }
    ~scratch_file() {
        std::error_code ec;
        std::filesystem::remove(path, ec);
    }
};

// lexicographic permutations of three items, frozen by hand
const std::vector<std::vector<int>> kPerm3 = {
    {0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0},
};

}  // namespace

TEST_CASE("utf8 round trip and validation") {
    const std::vector<std::uint32_t> samples = {0x41, 0xF1, 0x597D, 0x4F60, 0x1D11E};
    std::string text;
    for (auto cp : samples) text += ctc::utf8_encode(cp);
    CHECK(ctc::utf8_codepoints(text) == samples);
    CHECK(ctc::utf8_length(text) == 5);
    CHECK(ctc::utf8_length("比赛开始") == 4);

    CHECK_THROWS_AS((void)ctc::utf8_codepoints("\x80"), ctc::data_error);          // lone tail
    CHECK_THROWS_AS((void)ctc::utf8_codepoints("\xE4\xBD"), ctc::data_error);      // truncated
    CHECK_THROWS_AS((void)ctc::utf8_codepoints("\xC0\xAF"), ctc::data_error);      // overlong
    CHECK_THROWS_AS((void)ctc::utf8_codepoints("\xED\xA0\x80"), ctc::data_error);  // surrogate
    CHECK_THROWS_AS((void)ctc::utf8_codepoints("\xF8\x88\x80\x80"), ctc::data_error);
}

TEST_CASE("corpus loading skips and counts malformed lines") {
    scratch_file file("ctc_corpus_load.tsv",
                      "sports\t比赛开始\n"
                      "no_tab_line\n"
                      "\tmissing_label\n"
                      "missing_text\t\n"
                      "two\ttabs\there\n"
                      "bad_utf8\t\xE4\xBD\n"
                      "finance\t股市上涨\r\n");
    const auto report = ctc::load_corpus(file.path.string());
    REQUIRE(report.records.size() == 2);
    CHECK(report.malformed == 5);
    CHECK(report.records[0].label == "sports");
    CHECK(report.records[0].text == "比赛开始");
    CHECK(report.records[0].length == 4);
    CHECK(report.records[1].label == "finance");  // CR stripped
    CHECK(report.records[1].length == 4);
}

TEST_CASE("corpus loading errors") {
    CHECK_THROWS_AS((void)ctc::load_corpus("/nonexistent/corpus.tsv"), ctc::data_error);
    scratch_file file("ctc_corpus_empty.tsv", "no_tab\nstill no tab\n");
    CHECK_THROWS_AS((void)ctc::load_corpus(file.path.string()), ctc::data_error);
}

TEST_CASE("length buckets: frozen boundary cases") {
    std::vector<Record> records;
    for (Extent len : {5, 10, 500, 501, 5000, 5001}) {
        Record rec;
        rec.label = "x";
        rec.text = std::string(static_cast<std::size_t>(len), 'a');
        rec.length = len;
        records.push_back(rec);
    }
    const auto report = ctc::filter_and_bucket(records);
    auto lengths = [](const std::vector<Record>& recs) {
        std::vector<Extent> out;
        for (const auto& r : recs) out.push_back(r.length);
        return out;
    };
    CHECK(lengths(report.bucket1) == std::vector<Extent>{10, 500, 501, 5000});
    CHECK(lengths(report.bucket2) == std::vector<Extent>{10, 500});
    CHECK(lengths(report.bucket3) == std::vector<Extent>{501, 5000});
    CHECK(report.dropped_short == 1);
    CHECK(report.dropped_long == 1);

    CHECK(!ctc::bucket_keeps(1, 9));
    CHECK(ctc::bucket_keeps(1, 10));
    CHECK(ctc::bucket_keeps(1, 5000));
    CHECK(!ctc::bucket_keeps(1, 5001));
    CHECK(ctc::bucket_keeps(2, 500));  // boundary length 500 is short
    CHECK(!ctc::bucket_keeps(2, 501));
    CHECK(!ctc::bucket_keeps(3, 500));
    CHECK(ctc::bucket_keeps(3, 501));
    CHECK_THROWS_AS((void)ctc::bucket_keeps(4, 100), std::invalid_argument);
}

TEST_CASE("length buckets partition the kept range") {
    std::uint64_t state = 99;
    std::vector<Record> records;
    for (int i = 0; i < 4000; ++i) {
        Record rec;
        rec.label = "c" + std::to_string(i % 3);
        rec.length = static_cast<Extent>(ctc::splitmix64(state) % 6000 + 1);
        records.push_back(rec);
    }
    const auto report = ctc::filter_and_bucket(records);
    CHECK(report.bucket1.size() ==
          report.bucket2.size() + report.bucket3.size());
    CHECK(report.bucket1.size() + static_cast<std::size_t>(report.dropped_short) +
              static_cast<std::size_t>(report.dropped_long) ==
          records.size());
    for (const auto& r : report.bucket1) CHECK((r.length >= 10 && r.length <= 5000));
    for (const auto& r : report.bucket2) CHECK((r.length >= 10 && r.length <= 500));
    for (const auto& r : report.bucket3) CHECK((r.length > 500 && r.length <= 5000));
    // stable: kept records preserve input order
    std::vector<Extent> expect;
    for (const auto& r : records) {
        if (r.length >= 10 && r.length <= 5000) expect.push_back(r.length);
    }
    std::vector<Extent> got;
    for (const auto& r : report.bucket1) got.push_back(r.length);
    CHECK(got == expect);
}

TEST_CASE("bucket manifest lists bounds, counts and drops") {
    std::vector<Record> records = {make_record("a", std::string(20, 'x')),
                                   make_record("b", std::string(600, 'y')),
                                   make_record("a", "tiny")};
    const auto text = ctc::bucket_manifest(ctc::filter_and_bucket(records));
    CHECK(text.find("bucket1.count=2") != std::string::npos);
    CHECK(text.find("bucket2.count=1") != std::string::npos);
    CHECK(text.find("bucket3.count=1") != std::string::npos);
    CHECK(text.find("bucket2.max_len=500") != std::string::npos);
    CHECK(text.find("bucket3.min_len=501") != std::string::npos);
    CHECK(text.find("bucket1.class.a=1") != std::string::npos);
    CHECK(text.find("dropped.short=1") != std::string::npos);
    CHECK(text.find("total.input=3") != std::string::npos);
}

TEST_CASE("vocab construction: frozen example") {
    const std::vector<Record> records = {make_record("x", "你好好")};
    const auto vocab = ctc::Vocab::build(records, 1);
    REQUIRE(vocab.size() == 4);
    CHECK(vocab.id_of(0x597D) == 2);  // 好 twice -> first real id
    CHECK(vocab.id_of(0x4F60) == 3);  // 你 once
    CHECK(vocab.id_of(0x1234) == 1);  // absent -> UNK
    CHECK(vocab.codepoint_at(2) == 0x597D);
    CHECK(vocab.codepoint_at(3) == 0x4F60);
    CHECK_THROWS_AS((void)vocab.codepoint_at(0), std::invalid_argument);
    CHECK_THROWS_AS((void)vocab.codepoint_at(4), std::invalid_argument);

    const auto rare_pruned = ctc::Vocab::build(records, 3);
    CHECK(rare_pruned.size() == 2);  // reserved ids only

    // equal frequency resolves by ascending code point
    const auto tie = ctc::Vocab::build({make_record("x", "ba")}, 1);
    CHECK(tie.id_of('a') == 2);
    CHECK(tie.id_of('b') == 3);
}

TEST_CASE("vocab file format and digest") {
    const std::vector<Record> records = {make_record("x", "你好好")};
    const auto vocab = ctc::Vocab::build(records, 1);
    const auto text = vocab.serialize();
    CHECK(text == std::string("<PAD>\n<UNK>\n") + "好\n你\n");

    const auto parsed = ctc::Vocab::parse(text);
    CHECK(parsed.size() == vocab.size());
    CHECK(parsed.serialize() == text);
    CHECK(parsed.digest() == vocab.digest());

    scratch_file file("ctc_vocab_roundtrip.txt", "");
    vocab.save(file.path.string());
    const auto loaded = ctc::Vocab::load(file.path.string());
    CHECK(loaded.serialize() == text);

    // digest is content-derived and rebuild-stable
    CHECK(ctc::Vocab::build(records, 1).digest() == vocab.digest());
    CHECK(ctc::Vocab::build({make_record("x", "abc")}, 1).digest() != vocab.digest());

    CHECK_THROWS_AS((void)ctc::Vocab::parse("<UNK>\n<PAD>\n"), ctc::data_error);
    CHECK_THROWS_AS((void)ctc::Vocab::parse("<PAD>\n<UNK>\nab\n"), ctc::data_error);
    CHECK_THROWS_AS((void)ctc::Vocab::parse("<PAD>\n<UNK>\na\na\n"), ctc::data_error);
    CHECK_THROWS_AS((void)ctc::Vocab::load("/nonexistent/vocab.txt"), ctc::data_error);
}

TEST_CASE("text encoding: frozen example, truncation, padding") {
    const auto vocab = ctc::Vocab::build({make_record("x", "你好好")}, 1);
    CHECK(ctc::encode_text("你好", vocab, 4) == std::vector<int>{3, 2, 0, 0});
    CHECK(ctc::encode_text("你好", vocab, 1) == std::vector<int>{3});
    CHECK(ctc::encode_text("你z好", vocab, 4) == std::vector<int>{3, 1, 2, 0});
    CHECK_THROWS_AS((void)ctc::encode_text("你", vocab, 0), std::invalid_argument);

    CHECK(vocab.decode({3, 2, 0, 0}) == "你好");
    CHECK(vocab.decode({1}) == "\xEF\xBF\xBD");  // U+FFFD
}

TEST_CASE("encode/decode round trip for in-vocab text") {
    const auto vocab = ctc::Vocab::build({make_record("x", "abcde你好")}, 1);
    std::uint64_t state = 5;
    for (int trial = 0; trial < 50; ++trial) {
        std::string text;
        const auto len = ctc::splitmix64(state) % 12 + 1;
        for (std::uint64_t i = 0; i < len; ++i) {
            text += ctc::utf8_encode(vocab.codepoint_at(
                static_cast<int>(ctc::splitmix64(state) % 7) + 2));
        }
        const auto ids = ctc::encode_text(text, vocab, 16);
        CHECK(ids.size() == 16);
        CHECK(vocab.decode(ids) == text);
    }
}

TEST_CASE("batch encoding pads every row to the cap") {
    const auto vocab = ctc::Vocab::build({make_record("x", "你好好")}, 1);
    const ctc::LabelTable labels({"finance", "sports"});
    const std::vector<Record> records = {make_record("sports", "你好你好你好"),
                                         make_record("finance", "好")};
    const auto batch = ctc::encode_batch(records, vocab, labels, 4);
    REQUIRE(batch.ids.size() == 2);
    CHECK(batch.ids[0] == std::vector<int>{3, 2, 3, 2});  // truncated at cap
    CHECK(batch.ids[1] == std::vector<int>{2, 0, 0, 0});
    CHECK(batch.labels == std::vector<int>{1, 0});
    CHECK(batch.lengths == std::vector<Extent>{6, 1});

    const std::vector<Record> unknown = {make_record("weather", "好")};
    CHECK_THROWS_AS((void)ctc::encode_batch(unknown, vocab, labels, 4), ctc::data_error);
}

TEST_CASE("label table is sorted and rejects unknown labels") {
    const std::vector<Record> records = {make_record("sports", "a"), make_record("finance", "b"),
                                         make_record("sports", "c")};
    const auto table = ctc::LabelTable::build(records);
    REQUIRE(table.size() == 2);
    CHECK(table.name(0) == "finance");
    CHECK(table.name(1) == "sports");
    CHECK(table.id_of("sports") == 1);
    CHECK_THROWS_AS((void)table.id_of("weather"), ctc::data_error);
    CHECK_THROWS_AS((void)table.name(2), std::invalid_argument);
}

TEST_CASE("stratified split: proportions, determinism, caps") {
    std::vector<Record> records;
    for (int cls = 0; cls < 5; ++cls) {
        for (int i = 0; i < 100; ++i) {
            records.push_back(make_record("c" + std::to_string(cls),
                                          "t" + std::to_string(cls) + "_" + std::to_string(i)));
        }
    }
    const auto [train, test] = ctc::split_stratified(records, 0.2, 7);
    CHECK(train.size() == 400);
    CHECK(test.size() == 100);
    std::map<std::string, int> train_counts, test_counts;
    for (const auto& r : train) ++train_counts[r.label];
    for (const auto& r : test) ++test_counts[r.label];
    for (int cls = 0; cls < 5; ++cls) {
        CHECK(train_counts["c" + std::to_string(cls)] == 80);
        CHECK(test_counts["c" + std::to_string(cls)] == 20);
    }

    // train and test partition the input (as text multisets)
    std::multiset<std::string> seen, expect;
    for (const auto& r : records) expect.insert(r.text);
    for (const auto& r : train) seen.insert(r.text);
    for (const auto& r : test) seen.insert(r.text);
    CHECK(seen == expect);

    const auto [train2, test2] = ctc::split_stratified(records, 0.2, 7);
    CHECK(ctc::format_corpus(train2) == ctc::format_corpus(train));
    CHECK(ctc::format_corpus(test2) == ctc::format_corpus(test));
    const auto [train3, test3] = ctc::split_stratified(records, 0.2, 8);
    CHECK(ctc::format_corpus(train3) != ctc::format_corpus(train));

    const auto [capped_train, capped_test] = ctc::split_stratified(records, 0.2, 7, 30);
    CHECK(capped_train.size() == 150);
    CHECK(capped_test.size() == 100);
    std::map<std::string, int> capped_counts;
    for (const auto& r : capped_train) ++capped_counts[r.label];
    for (const auto& [label, count] : capped_counts) CHECK(count == 30);
}

TEST_CASE("stratified split: edge cases") {
    std::vector<Record> tiny = {make_record("a", "1"), make_record("a", "2"),
                                make_record("b", "3")};
    CHECK_THROWS_AS((void)ctc::split_stratified(tiny, 0.2, 1), ctc::data_error);

    // two records per class: both sides still get one each
    std::vector<Record> pairs = {make_record("a", "1"), make_record("a", "2"),
                                 make_record("b", "3"), make_record("b", "4")};
    const auto [train, test] = ctc::split_stratified(pairs, 0.01, 1);
    CHECK(train.size() == 2);
    CHECK(test.size() == 2);

    CHECK_THROWS_AS((void)ctc::split_stratified(pairs, 0.0, 1), std::invalid_argument);
    CHECK_THROWS_AS((void)ctc::split_stratified(pairs, 1.0, 1), std::invalid_argument);
}

TEST_CASE("synthetic corpus: shape, balance, determinism") {
    ctc::SynthConfig config;
    config.classes = 5;
    config.per_class = 40;
    config.seed = 11;
    const auto records = ctc::make_synthetic(config);
    REQUIRE(records.size() == 200);
    std::map<std::string, int> counts;
    for (const auto& r : records) {
        ++counts[r.label];
        CHECK(r.length >= config.len_lo);
        CHECK(r.length <= config.len_hi);
        CHECK(r.length == ctc::utf8_length(r.text));
    }
    REQUIRE(counts.size() == 5);
    for (const auto& [label, n] : counts) CHECK(n == 40);

    CHECK(ctc::format_corpus(ctc::make_synthetic(config)) == ctc::format_corpus(records));
    config.seed = 12;
    CHECK(ctc::format_corpus(ctc::make_synthetic(config)) != ctc::format_corpus(records));
}

TEST_CASE("synthetic corpus: every record carries each marker exactly once") {
    ctc::SynthConfig config;
    config.classes = 5;
    config.per_class = 30;
    const std::vector<std::uint32_t> markers = {0x5929, 0x5730, 0x4EBA};
    for (const auto& rec : ctc::make_synthetic(config)) {
        const auto cps = ctc::utf8_codepoints(rec.text);
        for (auto marker : markers) {
            CHECK(std::count(cps.begin(), cps.end(), marker) == 1);
        }
    }
}

TEST_CASE("synthetic corpus: trigram family plants the class trigram") {
    ctc::SynthConfig config;
    config.classes = 5;
    config.per_class = 25;
    config.order_fraction = 0.0;  // trigram cue only
    for (const auto& rec : ctc::make_synthetic(config)) {
        const int cls = std::stoi(rec.label.substr(1));
        const auto cps = ctc::utf8_codepoints(rec.text);
        const std::vector<std::uint32_t> tri = {
            0x4E00 + static_cast<std::uint32_t>((7 * cls + 1) % 60),
            0x4E00 + static_cast<std::uint32_t>((7 * cls + 3) % 60),
            0x4E00 + static_cast<std::uint32_t>((7 * cls + 5) % 60)};
        CHECK(std::search(cps.begin(), cps.end(), tri.begin(), tri.end()) != cps.end());
    }
}

TEST_CASE("synthetic corpus: order family encodes the class in marker order") {
    ctc::SynthConfig config;
    config.classes = 5;
    config.per_class = 25;
    config.order_fraction = 1.0;  // order cue only
    const std::vector<std::uint32_t> markers = {0x5929, 0x5730, 0x4EBA};
    for (const auto& rec : ctc::make_synthetic(config)) {
        const int cls = std::stoi(rec.label.substr(1));
        const auto cps = ctc::utf8_codepoints(rec.text);
        std::vector<int> order;  // marker indexes in text order
        for (auto cp : cps) {
            const auto it = std::find(markers.begin(), markers.end(), cp);
            if (it != markers.end()) {
                order.push_back(static_cast<int>(it - markers.begin()));
            }
        }
        CHECK(order == kPerm3[static_cast<std::size_t>(cls % 6)]);
    }
}

TEST_CASE("synthetic corpus: both_cues plants both signals") {
    ctc::SynthConfig config;
    config.classes = 3;
    config.per_class = 15;
    config.both_cues = true;
    const std::vector<std::uint32_t> markers = {0x5929, 0x5730, 0x4EBA};
    for (const auto& rec : ctc::make_synthetic(config)) {
        const int cls = std::stoi(rec.label.substr(1));
        const auto cps = ctc::utf8_codepoints(rec.text);
        std::vector<int> order;
        for (auto cp : cps) {
            const auto it = std::find(markers.begin(), markers.end(), cp);
            if (it != markers.end()) order.push_back(static_cast<int>(it - markers.begin()));
        }
        CHECK(order == kPerm3[static_cast<std::size_t>(cls % 6)]);
        const std::vector<std::uint32_t> tri = {
            0x4E00 + static_cast<std::uint32_t>((7 * cls + 1) % 60),
            0x4E00 + static_cast<std::uint32_t>((7 * cls + 3) % 60),
            0x4E00 + static_cast<std::uint32_t>((7 * cls + 5) % 60)};
        CHECK(std::search(cps.begin(), cps.end(), tri.begin(), tri.end()) != cps.end());
    }
}

TEST_CASE("synthetic corpus: config validation") {
    ctc::SynthConfig config;
    config.classes = 1;
    CHECK_THROWS_AS((void)ctc::make_synthetic(config), std::invalid_argument);
    config.classes = 5;
    config.len_lo = 10;
    config.len_hi = 10;
    CHECK_THROWS_AS((void)ctc::make_synthetic(config), std::invalid_argument);
    config.len_lo = 100;
    config.len_hi = 90;
    CHECK_THROWS_AS((void)ctc::make_synthetic(config), std::invalid_argument);
}

TEST_CASE("corpus files round trip through save and load") {
    ctc::SynthConfig config;
    config.classes = 3;
    config.per_class = 5;
    const auto records = ctc::make_synthetic(config);
    scratch_file file("ctc_corpus_roundtrip.tsv", "");
    ctc::save_corpus(records, file.path.string());
    const auto report = ctc::load_corpus(file.path.string());
    CHECK(report.malformed == 0);
    REQUIRE(report.records.size() == records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        CHECK(report.records[i].label == records[i].label);
        CHECK(report.records[i].text == records[i].text);
        CHECK(report.records[i].length == records[i].length);
    }
}
