#include "featstore/parquet.hpp"

#include <atomic>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "featstore/errors.hpp"
#include "featstore/version.hpp"

namespace featstore::parquet {

namespace {

std::atomic<int64_t> g_open_count{0};

// ==== thrift compact protocol ==============================================

enum CType : uint8_t {
    CT_STOP = 0,
    CT_TRUE = 1,
    CT_FALSE = 2,
    CT_BYTE = 3,
    CT_I16 = 4,
    CT_I32 = 5,
    CT_I64 = 6,
    CT_DOUBLE = 7,
    CT_BINARY = 8,
    CT_LIST = 9,
    CT_SET = 10,
    CT_MAP = 11,
    CT_STRUCT = 12,
};

struct ThriftWriter {
    std::string buf;
    std::vector<int16_t> id_stack;
    int16_t last_id = 0;

    void varint(uint64_t v) {
        while (v >= 0x80) {
            buf.push_back(static_cast<char>((v & 0x7f) | 0x80));
            v >>= 7;
        }
        buf.push_back(static_cast<char>(v));
    }
    static uint64_t zigzag(int64_t v) {
        return (static_cast<uint64_t>(v) << 1) ^ static_cast<uint64_t>(v >> 63);
    }
    void field_header(int16_t id, CType type) {
        const int delta = id - last_id;
        if (delta > 0 && delta <= 15) {
            buf.push_back(static_cast<char>((delta << 4) | type));
        } else {
            buf.push_back(static_cast<char>(type));
            varint(zigzag(id));
        }
        last_id = id;
    }
    void begin_struct() {
        id_stack.push_back(last_id);
        last_id = 0;
    }
    void end_struct() {
        buf.push_back(CT_STOP);
        last_id = id_stack.back();
        id_stack.pop_back();
    }
    void field_i32(int16_t id, int64_t v) {
        field_header(id, CT_I32);
        varint(zigzag(v));
    }
    void field_i64(int16_t id, int64_t v) {
        field_header(id, CT_I64);
        varint(zigzag(v));
    }
    void field_binary(int16_t id, const std::string& s) {
        field_header(id, CT_BINARY);
        varint(s.size());
        buf.append(s);
    }
    void list_header(size_t size, CType elem) {
        if (size < 15) {
            buf.push_back(static_cast<char>((size << 4) | elem));
        } else {
            buf.push_back(static_cast<char>(0xF0 | elem));
            varint(size);
        }
    }
};

struct ThriftReader {
    const uint8_t* p;
    const uint8_t* end;
    std::vector<int16_t> id_stack;
    int16_t last_id = 0;

    uint8_t byte() {
        if (p >= end) throw Error("ParquetCorrupt", "truncated metadata");
        return *p++;
    }
    uint64_t varint() {
        uint64_t v = 0;
        int shift = 0;
        while (true) {
            const uint8_t b = byte();
            v |= static_cast<uint64_t>(b & 0x7f) << shift;
            if (!(b & 0x80)) return v;
            shift += 7;
            if (shift > 63) throw Error("ParquetCorrupt", "varint overflow");
        }
    }
    int64_t zigzag() {
        const uint64_t v = varint();
        return static_cast<int64_t>(v >> 1) ^ -static_cast<int64_t>(v & 1);
    }
    std::string binary() {
        const uint64_t n = varint();
        if (static_cast<uint64_t>(end - p) < n) throw Error("ParquetCorrupt", "truncated string");
        std::string s(reinterpret_cast<const char*>(p), n);
        p += n;
        return s;
    }
    void begin_struct() {
        id_stack.push_back(last_id);
        last_id = 0;
    }
    void end_struct() {
        last_id = id_stack.back();
        id_stack.pop_back();
    }
    // Reads the next field header. Returns false at STOP.
    bool field(int16_t& id, CType& type) {
        const uint8_t h = byte();
        if (h == CT_STOP) return false;
        type = static_cast<CType>(h & 0x0f);
        const int delta = h >> 4;
        if (delta != 0)
            id = static_cast<int16_t>(last_id + delta);
        else
            id = static_cast<int16_t>(zigzag());
        last_id = id;
        return true;
    }
    std::pair<size_t, CType> list_header() {
        const uint8_t h = byte();
        const CType elem = static_cast<CType>(h & 0x0f);
        size_t n = h >> 4;
        if (n == 15) n = varint();
        return {n, elem};
    }
    void skip(CType type) {
        switch (type) {
            case CT_TRUE:
            case CT_FALSE: return;
            case CT_BYTE: byte(); return;
            case CT_I16:
            case CT_I32:
            case CT_I64: zigzag(); return;
            case CT_DOUBLE:
                if (end - p < 8) throw Error("ParquetCorrupt", "truncated double");
                p += 8;
                return;
            case CT_BINARY: binary(); return;
            case CT_LIST:
            case CT_SET: {
                auto [n, elem] = list_header();
                for (size_t i = 0; i < n; ++i) skip(elem);
                return;
            }
            case CT_MAP: {
                // compact map: varint size, then a (key<<4|value) type byte if size>0
                const size_t n = varint();
                if (n > 0) {
                    const uint8_t kv = byte();
                    const CType kt = static_cast<CType>(kv >> 4);
                    const CType vt = static_cast<CType>(kv & 0x0f);
                    for (size_t i = 0; i < n; ++i) {
                        skip(kt);
                        skip(vt);
                    }
                }
                return;
            }
            case CT_STRUCT: {
                begin_struct();
                int16_t id;
                CType t;
                while (field(id, t)) skip(t);
                end_struct();
                return;
            }
            default: throw Error("ParquetCorrupt", "unknown thrift type");
        }
    }
};

// ==== parquet enums =========================================================

enum PhysType : int { PT_BOOLEAN = 0, PT_INT64 = 2, PT_DOUBLE = 5, PT_BYTE_ARRAY = 6 };
constexpr int kRepOptional = 1;
constexpr int kEncodingPlain = 0;
constexpr int kEncodingRle = 3;
constexpr int kCodecUncompressed = 0;
constexpr int kPageTypeData = 0;
constexpr int kConvertedUtf8 = 0;

int phys_type_of(ColType t) {
    switch (t) {
        case ColType::F64: return PT_DOUBLE;
        case ColType::I64: return PT_INT64;
        case ColType::Str: return PT_BYTE_ARRAY;
        case ColType::Boolean: return PT_BOOLEAN;
    }
    return PT_DOUBLE;
}

// ==== low-level encoders ====================================================

void put_u32(std::string& out, uint32_t v) {
    char b[4] = {static_cast<char>(v), static_cast<char>(v >> 8), static_cast<char>(v >> 16),
                 static_cast<char>(v >> 24)};
    out.append(b, 4);
}

void put_u64(std::string& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>(v >> (8 * i)));
}

void put_uleb(std::string& out, uint64_t v) {
    while (v >= 0x80) {
        out.push_back(static_cast<char>((v & 0x7f) | 0x80));
        v >>= 7;
    }
    out.push_back(static_cast<char>(v));
}

// RLE/bit-packed hybrid for 1-bit definition levels.
std::string encode_def_levels(const std::vector<uint8_t>& valid) {
    std::string rle;
    bool uniform = true;
    for (uint8_t v : valid)
        if ((v != 0) != (valid[0] != 0)) {
            uniform = false;
            break;
        }
    if (uniform) {
        put_uleb(rle, static_cast<uint64_t>(valid.size()) << 1);  // RLE run
        rle.push_back(valid.empty() ? 0 : (valid[0] ? 1 : 0));
    } else {
        const size_t groups = (valid.size() + 7) / 8;
        put_uleb(rle, (static_cast<uint64_t>(groups) << 1) | 1);  // bit-packed run
        for (size_t g = 0; g < groups; ++g) {
            uint8_t b = 0;
            for (size_t i = 0; i < 8; ++i) {
                const size_t idx = g * 8 + i;
                if (idx < valid.size() && valid[idx]) b |= static_cast<uint8_t>(1u << i);
            }
            rle.push_back(static_cast<char>(b));
        }
    }
    std::string out;
    put_u32(out, static_cast<uint32_t>(rle.size()));
    out += rle;
    return out;
}

std::string encode_plain(const Column& c) {
    std::string out;
    switch (c.type) {
        case ColType::F64:
            for (size_t i = 0; i < c.size(); ++i)
                if (c.valid[i]) {
                    uint64_t bits;
                    std::memcpy(&bits, &c.f64[i], 8);
                    put_u64(out, bits);
                }
            break;
        case ColType::I64:
            for (size_t i = 0; i < c.size(); ++i)
                if (c.valid[i]) put_u64(out, static_cast<uint64_t>(c.i64[i]));
            break;
        case ColType::Str:
            for (size_t i = 0; i < c.size(); ++i)
                if (c.valid[i]) {
                    put_u32(out, static_cast<uint32_t>(c.str[i].size()));
                    out += c.str[i];
                }
            break;
        case ColType::Boolean: {
            uint8_t cur = 0;
            int nbits = 0;
            for (size_t i = 0; i < c.size(); ++i)
                if (c.valid[i]) {
                    if (c.boolean[i]) cur |= static_cast<uint8_t>(1u << nbits);
                    if (++nbits == 8) {
                        out.push_back(static_cast<char>(cur));
                        cur = 0;
                        nbits = 0;
                    }
                }
            if (nbits > 0) out.push_back(static_cast<char>(cur));
            break;
        }
    }
    return out;
}

// ==== metadata writers ======================================================

void write_page_header(ThriftWriter& w, int64_t num_values, int64_t page_size) {
    w.begin_struct();
    w.field_i32(1, kPageTypeData);
    w.field_i32(2, page_size);  // uncompressed_page_size
    w.field_i32(3, page_size);  // compressed_page_size
    w.field_header(5, CT_STRUCT);  // data_page_header
    w.begin_struct();
    w.field_i32(1, num_values);
    w.field_i32(2, kEncodingPlain);
    w.field_i32(3, kEncodingRle);   // definition levels
    w.field_i32(4, kEncodingRle);   // repetition levels (none present)
    w.end_struct();
    w.end_struct();
}

struct ChunkInfo {
    int64_t data_page_offset = 0;
    int64_t total_size = 0;
    int64_t num_values = 0;
};

void write_footer(ThriftWriter& w, const ColumnTable& table, const std::vector<ChunkInfo>& chunks) {
    w.begin_struct();
    w.field_i32(1, 1);  // version

    // schema: root element, then one leaf per column
    w.field_header(2, CT_LIST);
    w.list_header(table.cols.size() + 1, CT_STRUCT);
    {
        w.begin_struct();
        w.field_binary(4, "schema");
        w.field_i32(5, static_cast<int64_t>(table.cols.size()));  // num_children
        w.end_struct();
        for (const auto& c : table.cols) {
            w.begin_struct();
            w.field_i32(1, phys_type_of(c.type));
            w.field_i32(3, kRepOptional);
            w.field_binary(4, c.name);
            if (c.type == ColType::Str) w.field_i32(6, kConvertedUtf8);
            w.end_struct();
        }
    }

    w.field_i64(3, static_cast<int64_t>(table.n_rows));  // num_rows

    // row_groups: exactly one
    w.field_header(4, CT_LIST);
    w.list_header(1, CT_STRUCT);
    {
        w.begin_struct();
        w.field_header(1, CT_LIST);  // columns
        w.list_header(table.cols.size(), CT_STRUCT);
        int64_t total_bytes = 0;
        for (size_t i = 0; i < table.cols.size(); ++i) {
            const auto& c = table.cols[i];
            const auto& ck = chunks[i];
            total_bytes += ck.total_size;
            w.begin_struct();  // ColumnChunk
            w.field_i64(2, ck.data_page_offset);  // file_offset
            w.field_header(3, CT_STRUCT);         // meta_data
            w.begin_struct();
            w.field_i32(1, phys_type_of(c.type));
            w.field_header(2, CT_LIST);  // encodings
            w.list_header(2, CT_I32);
            w.varint(ThriftWriter::zigzag(kEncodingPlain));
            w.varint(ThriftWriter::zigzag(kEncodingRle));
            w.field_header(3, CT_LIST);  // path_in_schema
            w.list_header(1, CT_BINARY);
            w.varint(c.name.size());
            w.buf.append(c.name);
            w.field_i32(4, kCodecUncompressed);
            w.field_i64(5, ck.num_values);
            w.field_i64(6, ck.total_size);  // total_uncompressed_size
            w.field_i64(7, ck.total_size);  // total_compressed_size
            w.field_i64(9, ck.data_page_offset);
            w.end_struct();
            w.end_struct();
        }
        w.field_i64(2, total_bytes);
        w.field_i64(3, static_cast<int64_t>(table.n_rows));
        w.end_struct();
    }

    w.field_binary(6, std::string("featstore ") + FEATSTORE_VERSION);  // created_by
    w.end_struct();
}

// ==== decoders ==============================================================

struct PageInfo {
    int64_t num_values = 0;
    int64_t page_size = 0;
};

PageInfo read_page_header(ThriftReader& r) {
    PageInfo info;
    r.begin_struct();
    int16_t id;
    CType t;
    while (r.field(id, t)) {
        if (id == 3 && (t == CT_I32 || t == CT_I64)) {
            info.page_size = r.zigzag();
        } else if (id == 5 && t == CT_STRUCT) {
            r.begin_struct();
            int16_t did;
            CType dt;
            while (r.field(did, dt)) {
                if (did == 1 && (dt == CT_I32 || dt == CT_I64))
                    info.num_values = r.zigzag();
                else
                    r.skip(dt);
            }
            r.end_struct();
        } else {
            r.skip(t);
        }
    }
    r.end_struct();
    return info;
}

std::vector<uint8_t> decode_def_levels(const uint8_t* p, size_t len, size_t num_values) {
    std::vector<uint8_t> out;
    out.reserve(num_values);
    const uint8_t* end = p + len;
    while (out.size() < num_values && p < end) {
        uint64_t header = 0;
        int shift = 0;
        while (p < end) {
            const uint8_t b = *p++;
            header |= static_cast<uint64_t>(b & 0x7f) << shift;
            shift += 7;
            if (!(b & 0x80)) break;
        }
        if (header & 1) {
            const size_t groups = header >> 1;
            for (size_t g = 0; g < groups && p < end; ++g) {
                const uint8_t b = *p++;
                for (int i = 0; i < 8 && out.size() < num_values; ++i)
                    out.push_back((b >> i) & 1);
            }
        } else {
            const size_t run = header >> 1;
            if (p >= end) break;
            const uint8_t v = *p++;
            for (size_t i = 0; i < run && out.size() < num_values; ++i) out.push_back(v & 1);
        }
    }
    if (out.size() != num_values) throw Error("ParquetCorrupt", "definition level underrun");
    return out;
}

struct SchemaLeaf {
    std::string name;
    int phys_type = PT_DOUBLE;
};

struct FooterInfo {
    std::vector<SchemaLeaf> leaves;
    int64_t num_rows = 0;
    std::vector<ChunkInfo> chunks;  // one per leaf, same order
};

FooterInfo read_footer(ThriftReader& r) {
    FooterInfo out;
    r.begin_struct();
    int16_t id;
    CType t;
    while (r.field(id, t)) {
        if (id == 2 && t == CT_LIST) {  // schema
            auto [n, elem] = r.list_header();
            for (size_t i = 0; i < n; ++i) {
                SchemaLeaf leaf;
                bool is_leaf = true;
                r.begin_struct();
                int16_t sid;
                CType st;
                while (r.field(sid, st)) {
                    if (sid == 1 && (st == CT_I32 || st == CT_I64))
                        leaf.phys_type = static_cast<int>(r.zigzag());
                    else if (sid == 4 && st == CT_BINARY)
                        leaf.name = r.binary();
                    else if (sid == 5 && (st == CT_I32 || st == CT_I64)) {
                        r.zigzag();
                        is_leaf = false;  // has children → group node
                    } else
                        r.skip(st);
                }
                r.end_struct();
                if (is_leaf) out.leaves.push_back(std::move(leaf));
            }
        } else if (id == 3 && (t == CT_I64 || t == CT_I32)) {
            out.num_rows = r.zigzag();
        } else if (id == 4 && t == CT_LIST) {  // row_groups
            auto [n, elem] = r.list_header();
            if (n != 1) throw Error("ParquetUnsupported", "expected a single row group");
            r.begin_struct();
            int16_t gid;
            CType gt;
            while (r.field(gid, gt)) {
                if (gid == 1 && gt == CT_LIST) {  // columns
                    auto [nc, celem] = r.list_header();
                    for (size_t ci = 0; ci < nc; ++ci) {
                        ChunkInfo ck;
                        r.begin_struct();
                        int16_t cid;
                        CType ct;
                        while (r.field(cid, ct)) {
                            if (cid == 3 && ct == CT_STRUCT) {  // meta_data
                                r.begin_struct();
                                int16_t mid;
                                CType mt;
                                while (r.field(mid, mt)) {
                                    if (mid == 5 && (mt == CT_I64 || mt == CT_I32))
                                        ck.num_values = r.zigzag();
                                    else if (mid == 7 && (mt == CT_I64 || mt == CT_I32))
                                        ck.total_size = r.zigzag();
                                    else if (mid == 9 && (mt == CT_I64 || mt == CT_I32))
                                        ck.data_page_offset = r.zigzag();
                                    else if (mid == 4 && (mt == CT_I32 || mt == CT_I64)) {
                                        if (r.zigzag() != kCodecUncompressed)
                                            throw Error("ParquetUnsupported", "compressed file");
                                    } else
                                        r.skip(mt);
                                }
                                r.end_struct();
                            } else
                                r.skip(ct);
                        }
                        r.end_struct();
                        out.chunks.push_back(ck);
                    }
                } else
                    r.skip(gt);
            }
            r.end_struct();
        } else {
            r.skip(t);
        }
    }
    r.end_struct();
    return out;
}

uint32_t get_u32(const uint8_t* p) {
    return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
           (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

uint64_t get_u64(const uint8_t* p) {
    uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

}  // namespace

// ==== public API ============================================================

void write_table(const std::string& path, const ColumnTable& table) {
    for (const auto& c : table.cols)
        if (c.size() != table.n_rows)
            throw Error("LengthMismatch", "column " + c.name + " length differs from table");

    std::string file = "PAR1";
    std::vector<ChunkInfo> chunks;
    chunks.reserve(table.cols.size());

    for (const auto& c : table.cols) {
        const std::string defs = encode_def_levels(c.valid);
        const std::string values = encode_plain(c);
        const int64_t page_size = static_cast<int64_t>(defs.size() + values.size());

        ThriftWriter ph;
        write_page_header(ph, static_cast<int64_t>(c.size()), page_size);

        ChunkInfo ck;
        ck.data_page_offset = static_cast<int64_t>(file.size());
        ck.num_values = static_cast<int64_t>(c.size());
        ck.total_size = static_cast<int64_t>(ph.buf.size()) + page_size;
        chunks.push_back(ck);

        file += ph.buf;
        file += defs;
        file += values;
    }

    ThriftWriter footer;
    write_footer(footer, table, chunks);
    file += footer.buf;
    put_u32(file, static_cast<uint32_t>(footer.buf.size()));
    file += "PAR1";

    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("FileWrite", "cannot open for writing: " + tmp);
        out.write(file.data(), static_cast<std::streamsize>(file.size()));
        if (!out) throw Error("FileWrite", "short write: " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

ColumnTable read_table(const std::string& path) {
    g_open_count.fetch_add(1, std::memory_order_relaxed);

    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("FileNotFound", "cannot open: " + path);
    std::string file((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const auto* base = reinterpret_cast<const uint8_t*>(file.data());
    const size_t size = file.size();

    if (size < 12 || file.compare(0, 4, "PAR1") != 0 || file.compare(size - 4, 4, "PAR1") != 0)
        throw Error("ParquetCorrupt", "bad magic: " + path);
    const uint32_t footer_len = get_u32(base + size - 8);
    if (footer_len + 12 > size) throw Error("ParquetCorrupt", "bad footer length");

    ThriftReader fr{base + size - 8 - footer_len, base + size - 8};
    const FooterInfo footer = read_footer(fr);
    if (footer.leaves.size() != footer.chunks.size())
        throw Error("ParquetCorrupt", "schema/chunk count mismatch");

    ColumnTable table;
    table.n_rows = static_cast<size_t>(footer.num_rows);

    for (size_t ci = 0; ci < footer.leaves.size(); ++ci) {
        const auto& leaf = footer.leaves[ci];
        const auto& ck = footer.chunks[ci];

        ColType ct;
        switch (leaf.phys_type) {
            case PT_DOUBLE: ct = ColType::F64; break;
            case PT_INT64: ct = ColType::I64; break;
            case PT_BYTE_ARRAY: ct = ColType::Str; break;
            case PT_BOOLEAN: ct = ColType::Boolean; break;
            default: throw Error("ParquetUnsupported", "physical type of " + leaf.name);
        }
        Column& col = table.add_column(leaf.name, ct);

        const uint8_t* p = base + ck.data_page_offset;
        ThriftReader pr{p, base + size};
        const PageInfo page = read_page_header(pr);
        p = pr.p;

        const uint32_t def_len = get_u32(p);
        p += 4;
        const auto defs = decode_def_levels(p, def_len, static_cast<size_t>(page.num_values));
        p += def_len;

        size_t bool_bit = 0;
        for (size_t i = 0; i < defs.size(); ++i) {
            if (!defs[i]) {
                col.push_null();
                continue;
            }
            switch (ct) {
                case ColType::F64: {
                    const uint64_t bits = get_u64(p);
                    p += 8;
                    double v;
                    std::memcpy(&v, &bits, 8);
                    col.push_f64(v);
                    break;
                }
                case ColType::I64:
                    col.push_i64(static_cast<int64_t>(get_u64(p)));
                    p += 8;
                    break;
                case ColType::Str: {
                    const uint32_t len = get_u32(p);
                    p += 4;
                    col.push_str(std::string(reinterpret_cast<const char*>(p), len));
                    p += len;
                    break;
                }
                case ColType::Boolean: {
                    const uint8_t b = p[bool_bit / 8];
                    col.push_bool((b >> (bool_bit % 8)) & 1);
                    ++bool_bit;
                    break;
                }
            }
        }
        if (ct == ColType::Boolean) p += (bool_bit + 7) / 8;
    }
    return table;
}

int64_t file_open_count() { return g_open_count.load(std::memory_order_relaxed); }

void reset_file_open_count() { g_open_count.store(0, std::memory_order_relaxed); }

}  // namespace featstore::parquet
