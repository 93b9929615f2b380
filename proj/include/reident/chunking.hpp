#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "reident/corpus.hpp"
#include "reident/errors.hpp"
#include "reident/unicode.hpp"

namespace reident {

struct Chunk {
    std::string chunk_id;
    std::string source_doc_id;
    std::size_t start = 0;  // code-point offsets into the source document
    std::size_t end = 0;
    std::string text;

    friend bool operator==(const Chunk&, const Chunk&) = default;
};

enum class RenderMode { Retrieval, Infill };

struct LocalContext {
    std::string span_id;
    std::string text;
    std::size_t window = 0;
    RenderMode mode = RenderMode::Retrieval;
};

/// Split a document into contiguous chunks of roughly target_len code
/// points. A boundary is pushed forward to the next whitespace character
/// when one occurs within a 10% overshoot budget; otherwise the split is
/// hard. Concatenating the chunk texts reproduces the document exactly.
inline std::vector<Chunk> chunk_document(const std::string& source_doc_id,
                                         std::string_view doc_text, std::size_t target_len) {
    if (target_len == 0) {
        throw ValidationError("chunk target length must be >= 1");
    }
    std::vector<char32_t> cps;
    std::vector<std::size_t> byte_at;  // byte offset of each code point
    {
        std::size_t i = 0;
        while (i < doc_text.size()) {
            byte_at.push_back(i);
            cps.push_back(decode_cp(doc_text, i));
        }
        byte_at.push_back(doc_text.size());
    }
    const std::size_t len = cps.size();
    const std::size_t budget = target_len / 10;

    std::vector<Chunk> chunks;
    std::size_t pos = 0;
    while (pos < len) {
        std::size_t end = pos + target_len < len ? pos + target_len : len;
        if (end < len) {
            const std::size_t scan_end = end + budget < len ? end + budget : len;
            for (std::size_t j = end; j < scan_end; ++j) {
                if (is_space_cp(cps[j])) {
                    end = j + 1;
                    break;
                }
            }
        }
        Chunk c;
        c.chunk_id = source_doc_id + ":" + std::to_string(chunks.size());
        c.source_doc_id = source_doc_id;
        c.start = pos;
        c.end = end;
        c.text = std::string(doc_text.substr(byte_at[pos], byte_at[end] - byte_at[pos]));
        chunks.push_back(std::move(c));
        pos = end;
    }
    return chunks;
}

/// Window of `window` code points around a span (half on each side, with
/// clipped budget spilling over to the other side), rendered for retrieval
/// or infilling. The target span renders as "[MASK]". Other unrestored
/// spans render as "[ANON]" (Retrieval) or "anon" (Infill); restored spans
/// appear as their substituted values. The window is computed before
/// rendering and its edges expand outward over any placeholder they would
/// cut, so both modes cover the same stretch of the document.
inline LocalContext local_context(const DeidDocument& doc, const std::string& span_id,
                                  std::size_t window, RenderMode mode) {
    const MaskedSpan* target = doc.find_span(span_id);
    if (target == nullptr) {
        throw ValidationError("doc " + doc.doc_id + ": unknown span_id " + span_id);
    }
    if (target->restored()) {
        throw ValidationError("doc " + doc.doc_id + ": span " + span_id + " already restored");
    }

    const std::size_t len = cp_length(doc.text);
    const std::size_t want_left = window / 2;
    const std::size_t want_right = window - want_left;
    const std::size_t avail_left = target->start;
    const std::size_t avail_right = len - target->end;

    std::size_t left = want_left < avail_left ? want_left : avail_left;
    std::size_t right = want_right < avail_right ? want_right : avail_right;
    std::size_t spill = (want_left - left) + (want_right - right);
    if (spill > 0 && right < avail_right) {
        const std::size_t extra = avail_right - right < spill ? avail_right - right : spill;
        right += extra;
        spill -= extra;
    }
    if (spill > 0 && left < avail_left) {
        const std::size_t extra = avail_left - left < spill ? avail_left - left : spill;
        left += extra;
    }

    std::size_t ws = target->start - left;
    std::size_t we = target->end + right;
    for (const auto& s : doc.spans) {
        if (s.restored()) {
            continue;
        }
        if (s.start < ws && ws < s.end) {
            ws = s.start;
        }
        if (s.start < we && we < s.end) {
            we = s.end;
        }
    }

    std::string out;
    std::size_t cur = ws;
    for (const auto& s : doc.spans) {
        if (s.restored() || s.end <= ws || s.start >= we) {
            continue;
        }
        out += cp_slice(doc.text, cur, s.start);
        if (s.span_id == span_id) {
            out += "[MASK]";
        } else {
            out += mode == RenderMode::Retrieval ? "[ANON]" : "anon";
        }
        cur = s.end;
    }
    out += cp_slice(doc.text, cur, we);

    return LocalContext{span_id, std::move(out), window, mode};
}

}  // namespace reident
