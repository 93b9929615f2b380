#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "reident/errors.hpp"
#include "reident/io.hpp"
#include "reident/unicode.hpp"

namespace reident {

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

enum class IdClass { Direct, Quasi };

inline const char* to_string(IdClass c) {
    return c == IdClass::Direct ? "direct" : "quasi";
}

inline IdClass id_class_from_string(const std::string& s) {
    if (s == "direct") {
        return IdClass::Direct;
    }
    if (s == "quasi") {
        return IdClass::Quasi;
    }
    throw ValidationError("unknown id_class \"" + s + "\" (expected \"direct\" or \"quasi\")");
}

/// In-text placeholder for one masked span. Each span gets its own token so
/// it can be addressed individually; the plain "[MASK]" marker the LLM sees
/// is produced at render time.
inline std::string mask_token(const std::string& span_id) {
    return "[MASK-" + span_id + "]";
}

struct MaskedSpan {
    std::string span_id;
    std::size_t start = 0;  // code-point offsets into the document text
    std::size_t end = 0;
    IdClass id_class = IdClass::Direct;
    std::optional<std::string> gold_value;
    std::optional<std::string> current_value;  // set once re-identified

    bool restored() const { return current_value.has_value(); }

    friend bool operator==(const MaskedSpan&, const MaskedSpan&) = default;
};

struct DeidDocument {
    std::string doc_id;
    std::string text;
    std::vector<MaskedSpan> spans;  // ascending by start offset
    std::optional<std::string> case_id;

    const MaskedSpan* find_span(const std::string& span_id) const {
        for (const auto& s : spans) {
            if (s.span_id == span_id) {
                return &s;
            }
        }
        return nullptr;
    }

    friend bool operator==(const DeidDocument&, const DeidDocument&) = default;
};

struct BackgroundDocument {
    std::string doc_id;
    std::string text;
    std::map<std::string, std::string> metadata;

    friend bool operator==(const BackgroundDocument&, const BackgroundDocument&) = default;
};

struct BackgroundCorpus {
    std::vector<BackgroundDocument> docs;

    friend bool operator==(const BackgroundCorpus&, const BackgroundCorpus&) = default;
};

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

/// Checks every documented document invariant: spans strictly ascending and
/// non-overlapping, ranges inside the text, placeholders (or substituted
/// values) matching the text slice, unique span ids, non-empty gold values.
inline void validate_document(const DeidDocument& doc) {
    const std::size_t text_len = cp_length(doc.text);

    // Structural invariants first: overlapping or out-of-range spans make
    // the per-span content checks meaningless.
    std::vector<std::string> seen_ids;
    for (std::size_t i = 0; i < doc.spans.size(); ++i) {
        const MaskedSpan& s = doc.spans[i];
        const std::string where = "doc " + doc.doc_id + " span " + s.span_id;
        if (std::find(seen_ids.begin(), seen_ids.end(), s.span_id) != seen_ids.end()) {
            throw ValidationError(where + ": duplicate span_id");
        }
        seen_ids.push_back(s.span_id);
        // A placeholder is never empty; a span restored to "" legitimately
        // has an empty range.
        if (!s.restored() && s.start >= s.end) {
            throw ValidationError(where + ": empty or inverted range");
        }
        if (s.restored() && s.end < s.start) {
            throw ValidationError(where + ": inverted range");
        }
        if (s.end > text_len) {
            throw ValidationError(where + ": range [" + std::to_string(s.start) + "," +
                                  std::to_string(s.end) + ") exceeds text length " +
                                  std::to_string(text_len));
        }
        if (i > 0) {
            const MaskedSpan& prev = doc.spans[i - 1];
            if (s.start < prev.end) {
                throw ValidationError("doc " + doc.doc_id + ": spans " + prev.span_id +
                                      ", " + s.span_id + " overlap");
            }
        }
    }

    for (const MaskedSpan& s : doc.spans) {
        const std::string where = "doc " + doc.doc_id + " span " + s.span_id;
        const std::string slice = cp_slice(doc.text, s.start, s.end);
        const std::string expected = s.current_value ? *s.current_value : mask_token(s.span_id);
        if (slice != expected) {
            throw ValidationError(where + ": text slice \"" + slice +
                                  "\" does not match expected \"" + expected + "\"");
        }
        if (s.gold_value && s.gold_value->empty()) {
            throw ValidationError(where + ": gold_value present but empty");
        }
    }
}

// ---------------------------------------------------------------------------
// JSON conversion
// ---------------------------------------------------------------------------

inline nlohmann::json span_to_json(const MaskedSpan& s) {
    nlohmann::json j{
        {"span_id", s.span_id},
        {"start", s.start},
        {"end", s.end},
        {"id_class", to_string(s.id_class)},
        {"gold_value", s.gold_value ? nlohmann::json(*s.gold_value) : nlohmann::json(nullptr)},
    };
    if (s.current_value) {
        j["current_value"] = *s.current_value;
    }
    return j;
}

inline nlohmann::json document_to_json(const DeidDocument& doc) {
    nlohmann::json spans = nlohmann::json::array();
    for (const auto& s : doc.spans) {
        spans.push_back(span_to_json(s));
    }
    return nlohmann::json{
        {"doc_id", doc.doc_id},
        {"text", doc.text},
        {"case_id", doc.case_id ? nlohmann::json(*doc.case_id) : nlohmann::json(nullptr)},
        {"spans", std::move(spans)},
    };
}

namespace detail {

inline std::string require_string(const nlohmann::json& j, const char* key,
                                  const std::string& where) {
    if (!j.contains(key)) {
        throw ValidationError(where + ": missing \"" + key + "\"");
    }
    if (!j.at(key).is_string()) {
        throw ValidationError(where + ": \"" + key + "\" must be a string");
    }
    return j.at(key).get<std::string>();
}

inline std::size_t require_offset(const nlohmann::json& j, const char* key,
                                  const std::string& where) {
    if (!j.contains(key) || !j.at(key).is_number_integer() || j.at(key).get<long long>() < 0) {
        throw ValidationError(where + ": \"" + key + "\" must be a non-negative integer");
    }
    return j.at(key).get<std::size_t>();
}

inline std::optional<std::string> optional_string(const nlohmann::json& j, const char* key,
                                                  const std::string& where) {
    if (!j.contains(key) || j.at(key).is_null()) {
        return std::nullopt;
    }
    if (!j.at(key).is_string()) {
        throw ValidationError(where + ": \"" + key + "\" must be a string or null");
    }
    return j.at(key).get<std::string>();
}

}  // namespace detail

inline MaskedSpan span_from_json(const nlohmann::json& j, const std::string& where) {
    if (!j.is_object()) {
        throw ValidationError(where + ": span entry must be an object");
    }
    MaskedSpan s;
    s.span_id = detail::require_string(j, "span_id", where);
    const std::string here = where + " span " + s.span_id;
    s.start = detail::require_offset(j, "start", here);
    s.end = detail::require_offset(j, "end", here);
    s.id_class = id_class_from_string(detail::require_string(j, "id_class", here));
    s.gold_value = detail::optional_string(j, "gold_value", here);
    s.current_value = detail::optional_string(j, "current_value", here);
    return s;
}

inline DeidDocument document_from_json(const nlohmann::json& j, const std::string& where) {
    if (!j.is_object()) {
        throw ValidationError(where + ": document entry must be an object");
    }
    DeidDocument doc;
    doc.doc_id = detail::require_string(j, "doc_id", where);
    const std::string here = "doc " + doc.doc_id;
    doc.text = detail::require_string(j, "text", here);
    doc.case_id = detail::optional_string(j, "case_id", here);
    if (!j.contains("spans") || !j.at("spans").is_array()) {
        throw ValidationError(here + ": missing \"spans\" array");
    }
    for (const auto& js : j.at("spans")) {
        doc.spans.push_back(span_from_json(js, here));
    }
    std::stable_sort(doc.spans.begin(), doc.spans.end(),
                     [](const MaskedSpan& a, const MaskedSpan& b) { return a.start < b.start; });
    validate_document(doc);
    return doc;
}

// ---------------------------------------------------------------------------
// Loading and saving
// ---------------------------------------------------------------------------

/// De-identified documents: a JSON array of document objects.
inline std::vector<DeidDocument> load_deid_documents(const std::filesystem::path& path) {
    const std::string content = read_text_file(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(content);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path.string(), line_of_byte(content, e.byte), e.what());
    }
    if (!j.is_array()) {
        throw ValidationError(path.string() + ": expected a JSON array of documents");
    }
    std::vector<DeidDocument> docs;
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < j.size(); ++i) {
        DeidDocument doc = document_from_json(j[i], path.string() + " entry " + std::to_string(i));
        if (std::find(ids.begin(), ids.end(), doc.doc_id) != ids.end()) {
            throw ValidationError(path.string() + ": duplicate doc_id " + doc.doc_id);
        }
        ids.push_back(doc.doc_id);
        docs.push_back(std::move(doc));
    }
    return docs;
}

inline void save_deid_documents(const std::vector<DeidDocument>& docs,
                                const std::filesystem::path& path) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& d : docs) {
        j.push_back(document_to_json(d));
    }
    write_text_file(path, j.dump(2) + "\n");
}

namespace detail {

inline BackgroundDocument background_from_json(const nlohmann::json& j, const std::string& where) {
    if (!j.is_object()) {
        throw ValidationError(where + ": record must be a JSON object");
    }
    BackgroundDocument doc;
    doc.doc_id = require_string(j, "doc_id", where);
    doc.text = require_string(j, "text", where + " (doc " + doc.doc_id + ")");
    if (doc.text.empty()) {
        throw ValidationError(where + ": doc " + doc.doc_id + " has empty text");
    }
    if (j.contains("metadata")) {
        const auto& m = j.at("metadata");
        if (!m.is_object()) {
            throw ValidationError(where + ": doc " + doc.doc_id + " metadata must be an object");
        }
        for (auto it = m.begin(); it != m.end(); ++it) {
            if (!it.value().is_string()) {
                throw ValidationError(where + ": doc " + doc.doc_id + " metadata values must be strings");
            }
            doc.metadata[it.key()] = it.value().get<std::string>();
        }
    }
    return doc;
}

}  // namespace detail

/// Background corpus: either one JSON-lines file (an object per line) or a
/// directory of .json files, loaded in filename order.
inline BackgroundCorpus load_background(const std::filesystem::path& path) {
    BackgroundCorpus corpus;
    std::vector<std::string> ids;

    auto add = [&](BackgroundDocument doc) {
        if (std::find(ids.begin(), ids.end(), doc.doc_id) != ids.end()) {
            throw ValidationError("duplicate doc_id " + doc.doc_id + " in background corpus");
        }
        ids.push_back(doc.doc_id);
        corpus.docs.push_back(std::move(doc));
    };

    if (std::filesystem::is_directory(path)) {
        std::vector<std::filesystem::path> files;
        for (const auto& entry : std::filesystem::directory_iterator(path)) {
            if (entry.is_regular_file() && entry.path().extension() == ".json") {
                files.push_back(entry.path());
            }
        }
        std::sort(files.begin(), files.end(),
                  [](const auto& a, const auto& b) { return a.filename() < b.filename(); });
        for (const auto& file : files) {
            const std::string content = read_text_file(file);
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(content);
            } catch (const nlohmann::json::parse_error& e) {
                throw ParseError(file.string(), line_of_byte(content, e.byte), e.what());
            }
            add(detail::background_from_json(j, file.string()));
        }
        return corpus;
    }

    const std::string content = read_text_file(path);
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= content.size()) {
        const std::size_t eol = content.find('\n', pos);
        const std::string_view line(content.data() + pos,
                                    (eol == std::string::npos ? content.size() : eol) - pos);
        ++line_no;
        pos = (eol == std::string::npos) ? content.size() + 1 : eol + 1;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
            continue;
        }
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(path.string(), line_no, e.what());
        }
        add(detail::background_from_json(j, path.string() + ":" + std::to_string(line_no)));
    }
    return corpus;
}

// ---------------------------------------------------------------------------
// Substitution
// ---------------------------------------------------------------------------

/// Replace span_id's placeholder with value. Pure: returns a new document
/// with the span's current_value recorded and every later span's offsets
/// shifted by the length difference.
inline DeidDocument substitute_span(const DeidDocument& doc, const std::string& span_id,
                                    const std::string& value) {
    std::size_t idx = doc.spans.size();
    for (std::size_t i = 0; i < doc.spans.size(); ++i) {
        if (doc.spans[i].span_id == span_id) {
            idx = i;
            break;
        }
    }
    if (idx == doc.spans.size()) {
        throw ValidationError("doc " + doc.doc_id + ": unknown span_id " + span_id);
    }
    if (doc.spans[idx].restored()) {
        throw ValidationError("doc " + doc.doc_id + ": span " + span_id + " already substituted");
    }

    DeidDocument out = doc;
    MaskedSpan& span = out.spans[idx];

    const std::size_t b0 = byte_offset(out.text, span.start);
    const std::size_t b1 = byte_offset(out.text, span.end);
    out.text = out.text.substr(0, b0) + value + out.text.substr(b1);

    const std::size_t value_len = cp_length(value);
    const std::size_t old_len = span.end - span.start;
    span.end = span.start + value_len;
    span.current_value = value;

    for (std::size_t i = idx + 1; i < out.spans.size(); ++i) {
        out.spans[i].start += value_len;
        out.spans[i].start -= old_len;
        out.spans[i].end += value_len;
        out.spans[i].end -= old_len;
    }
    return out;
}

/// Query text for sparse retrieval: the document with every unrestored
/// placeholder removed. Masked spans carry no lexical signal, and leaving
/// the placeholders in would bias ranking toward bracket tokens.
inline std::string render_sparse_query(const DeidDocument& doc) {
    std::string out;
    out.reserve(doc.text.size());
    std::size_t cp = 0;
    std::size_t byte = 0;
    auto advance_to = [&](std::size_t cp_target) {
        while (cp < cp_target && byte < doc.text.size()) {
            decode_cp(doc.text, byte);
            ++cp;
        }
    };
    for (const auto& span : doc.spans) {
        if (span.restored()) {
            continue;
        }
        const std::size_t from = byte;
        advance_to(span.start);
        out.append(doc.text, from, byte - from);
        advance_to(span.end);
    }
    out.append(doc.text, byte, doc.text.size() - byte);
    return out;
}

}  // namespace reident
