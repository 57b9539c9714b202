// SPDX-License-Identifier: Apache-2.0
#include "psmlab/data_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

namespace psm {

void TrajectoryDataset::validate() const {
    size_t dim = static_cast<size_t>(n_particles) * spatial_dim;
    for (const Vec& p : positions)
        if (p.size() != dim)
            throw DataError("trajectory: frame size does not match n_particles * spatial_dim");
    if (!forces.empty()) {
        if (forces.size() != positions.size())
            throw DataError("trajectory: force frame count differs from positions");
        for (const Vec& f : forces)
            if (f.size() != dim)
                throw DataError("trajectory: force frame has wrong size");
    }
    if (!energies.empty() && energies.size() != positions.size())
        throw DataError("trajectory: energy count differs from frame count");
    if (!atomic_numbers.empty() &&
        atomic_numbers.size() != static_cast<size_t>(n_particles))
        throw DataError("trajectory: atomic number count differs from n_particles");
}

namespace {

// ---- byte-level helpers --------------------------------------------------

struct ByteReader {
    const unsigned char* data;
    size_t size;
    size_t pos = 0;

    void require(size_t n) const {
        if (pos + n > size)
            throw FormatError("unexpected end of data at offset " +
                              std::to_string(pos));
    }
    std::uint8_t u8() {
        require(1);
        return data[pos++];
    }
    std::uint16_t u16() {
        require(2);
        std::uint16_t v = static_cast<std::uint16_t>(data[pos]) |
                          static_cast<std::uint16_t>(data[pos + 1]) << 8;
        pos += 2;
        return v;
    }
    std::uint32_t u32() {
        require(4);
        std::uint32_t v = 0;
        for (int i = 3; i >= 0; --i) v = (v << 8) | data[pos + i];
        pos += 4;
        return v;
    }
    std::string bytes(size_t n) {
        require(n);
        std::string s(reinterpret_cast<const char*>(data + pos), n);
        pos += n;
        return s;
    }
    void skip(size_t n) {
        require(n);
        pos += n;
    }
};

void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
}
void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

// ---- NPY -----------------------------------------------------------------

struct NpyArray {
    std::vector<size_t> shape;
    bool is_integer = false;
    Vec values; // converted to double regardless of source dtype
};

// minimal parser for the python-literal header dict the format prescribes
struct HeaderDict {
    std::string descr;
    bool fortran_order = false;
    std::vector<size_t> shape;
};

HeaderDict parse_npy_header(const std::string& h) {
    HeaderDict out;
    auto find_key = [&](const std::string& key) {
        size_t p = h.find("'" + key + "'");
        if (p == std::string::npos)
            throw FormatError("npy header missing key '" + key + "'");
        p = h.find(':', p);
        if (p == std::string::npos) throw FormatError("npy header: malformed dict");
        return p + 1;
    };

    size_t p = find_key("descr");
    size_t q1 = h.find('\'', p);
    if (q1 == std::string::npos) throw FormatError("npy header: unquoted descr");
    size_t q2 = h.find('\'', q1 + 1);
    if (q2 == std::string::npos) throw FormatError("npy header: unterminated descr");
    out.descr = h.substr(q1 + 1, q2 - q1 - 1);

    p = find_key("fortran_order");
    while (p < h.size() && h[p] == ' ') ++p;
    if (h.compare(p, 4, "True") == 0)
        out.fortran_order = true;
    else if (h.compare(p, 5, "False") == 0)
        out.fortran_order = false;
    else
        throw FormatError("npy header: fortran_order is neither True nor False");

    p = find_key("shape");
    size_t open = h.find('(', p);
    size_t close = h.find(')', p);
    if (open == std::string::npos || close == std::string::npos || close < open)
        throw FormatError("npy header: malformed shape tuple");
    std::string tup = h.substr(open + 1, close - open - 1);
    std::stringstream ss(tup);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        size_t b = tok.find_first_not_of(" \t");
        if (b == std::string::npos) continue;
        size_t e = tok.find_last_not_of(" \t");
        tok = tok.substr(b, e - b + 1);
        if (tok.empty()) continue;
        try {
            long long v = std::stoll(tok);
            if (v < 0) throw FormatError("npy header: negative shape dim");
            out.shape.push_back(static_cast<size_t>(v));
        } catch (const std::logic_error&) {
            throw FormatError("npy header: non-integer shape entry '" + tok + "'");
        }
    }
    return out;
}

NpyArray parse_npy(const std::string& blob) {
    ByteReader r{reinterpret_cast<const unsigned char*>(blob.data()), blob.size()};
    if (r.bytes(6) != "\x93NUMPY")
        throw FormatError("bad npy magic at offset 0");
    std::uint8_t major = r.u8();
    std::uint8_t minor = r.u8();
    (void)minor;
    size_t hlen;
    if (major == 1)
        hlen = r.u16();
    else if (major == 2)
        hlen = r.u32();
    else
        throw FormatError("unsupported npy version " + std::to_string(major));
    std::string header = r.bytes(hlen);
    HeaderDict hd = parse_npy_header(header);
    if (hd.fortran_order)
        throw FormatError("fortran-order arrays are not supported");

    size_t item;
    bool integer;
    if (hd.descr == "<f8") {
        item = 8;
        integer = false;
    } else if (hd.descr == "<f4") {
        item = 4;
        integer = false;
    } else if (hd.descr == "<i8") {
        item = 8;
        integer = true;
    } else if (hd.descr == "<i4") {
        item = 4;
        integer = true;
    } else {
        throw FormatError("unsupported npy dtype '" + hd.descr + "'");
    }

    size_t count = 1;
    for (size_t d : hd.shape) {
        if (d != 0 && count > blob.size() / d)
            throw FormatError("npy shape overflows the payload");
        count *= d;
    }
    r.require(count * item);

    NpyArray out;
    out.shape = hd.shape;
    out.is_integer = integer;
    out.values.resize(count);
    const unsigned char* p = r.data + r.pos;
    for (size_t i = 0; i < count; ++i, p += item) {
        if (hd.descr == "<f8") {
            double v;
            std::memcpy(&v, p, 8);
            out.values[i] = v;
        } else if (hd.descr == "<f4") {
            float v;
            std::memcpy(&v, p, 4);
            out.values[i] = v;
        } else if (hd.descr == "<i8") {
            std::int64_t v;
            std::memcpy(&v, p, 8);
            out.values[i] = static_cast<double>(v);
        } else {
            std::int32_t v;
            std::memcpy(&v, p, 4);
            out.values[i] = v;
        }
    }
    return out;
}

std::string make_npy(const std::vector<size_t>& shape, const std::string& descr,
                     const void* data, size_t item_size) {
    std::string shape_str = "(";
    for (size_t i = 0; i < shape.size(); ++i) {
        shape_str += std::to_string(shape[i]);
        if (shape.size() == 1 || i + 1 < shape.size()) shape_str += ",";
        if (i + 1 < shape.size()) shape_str += " ";
    }
    shape_str += ")";
    std::string dict = "{'descr': '" + descr +
                       "', 'fortran_order': False, 'shape': " + shape_str + ", }";
    // total header (magic through newline) must be a multiple of 64
    size_t base = 10 + dict.size() + 1;
    size_t pad = (64 - base % 64) % 64;
    dict.append(pad, ' ');
    dict.push_back('\n');

    std::string out;
    out += "\x93NUMPY";
    out.push_back('\x01');
    out.push_back('\x00');
    put_u16(out, static_cast<std::uint16_t>(dict.size()));
    out += dict;
    size_t count = 1;
    for (size_t d : shape) count *= d;
    out.append(reinterpret_cast<const char*>(data), count * item_size);
    return out;
}

// ---- ZIP container ---------------------------------------------------------

constexpr std::uint32_t kLocalSig = 0x04034b50;
constexpr std::uint32_t kCentralSig = 0x02014b50;
constexpr std::uint32_t kEocdSig = 0x06054b50;

std::string inflate_raw(const std::string& in, size_t expected) {
    std::string out(expected, '\0');
    z_stream zs{};
    if (inflateInit2(&zs, -15) != Z_OK)
        throw FormatError("zlib initialization failed");
    zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(in.data()));
    zs.avail_in = static_cast<uInt>(in.size());
    zs.next_out = reinterpret_cast<Bytef*>(out.data());
    zs.avail_out = static_cast<uInt>(out.size());
    int rc = inflate(&zs, Z_FINISH);
    inflateEnd(&zs);
    if (rc != Z_STREAM_END || zs.total_out != expected)
        throw FormatError("corrupt deflate stream in archive entry");
    return out;
}

struct ZipEntry {
    std::string name;
    std::string data;
};

std::vector<ZipEntry> read_zip(const std::string& raw) {
    if (raw.size() < 22) throw FormatError("file too small to be a zip archive");
    const unsigned char* bytes = reinterpret_cast<const unsigned char*>(raw.data());

    // EOCD: scan backwards over a possible comment
    size_t eocd = std::string::npos;
    size_t lo = raw.size() >= 22 + 65535 ? raw.size() - 22 - 65535 : 0;
    for (size_t i = raw.size() - 22 + 1; i-- > lo;) {
        std::uint32_t sig = bytes[i] | bytes[i + 1] << 8 | bytes[i + 2] << 16 |
                            static_cast<std::uint32_t>(bytes[i + 3]) << 24;
        if (sig == kEocdSig) {
            eocd = i;
            break;
        }
    }
    if (eocd == std::string::npos)
        throw FormatError("zip end-of-central-directory record not found");

    ByteReader er{bytes, raw.size(), eocd + 4};
    er.skip(6); // disk numbers, entries on disk
    std::uint16_t n_entries = er.u16();
    er.skip(4); // central dir size
    std::uint32_t cd_offset = er.u32();
    if (cd_offset > raw.size())
        throw FormatError("zip central directory offset out of range");

    std::vector<ZipEntry> entries;
    ByteReader cd{bytes, raw.size(), cd_offset};
    for (int e = 0; e < n_entries; ++e) {
        if (cd.u32() != kCentralSig)
            throw FormatError("bad central directory signature at offset " +
                              std::to_string(cd.pos - 4));
        cd.skip(6); // versions, flags
        std::uint16_t method = cd.u16();
        cd.skip(4); // time/date
        std::uint32_t crc = cd.u32();
        std::uint32_t csize = cd.u32();
        std::uint32_t usize = cd.u32();
        std::uint16_t name_len = cd.u16();
        std::uint16_t extra_len = cd.u16();
        std::uint16_t comment_len = cd.u16();
        cd.skip(8); // disk, attrs
        std::uint32_t local_off = cd.u32();
        std::string name = cd.bytes(name_len);
        cd.skip(static_cast<size_t>(extra_len) + comment_len);

        ByteReader lr{bytes, raw.size(), local_off};
        if (lr.u32() != kLocalSig)
            throw FormatError("bad local header signature for entry '" + name + "'");
        lr.skip(22); // version..usize
        std::uint16_t lname = lr.u16();
        std::uint16_t lextra = lr.u16();
        lr.skip(static_cast<size_t>(lname) + lextra);
        std::string payload = lr.bytes(csize);

        std::string data;
        if (method == 0) {
            if (csize != usize)
                throw FormatError("stored entry '" + name + "' has mismatched sizes");
            data = std::move(payload);
        } else if (method == 8) {
            if (usize > (1u << 30))
                throw FormatError("entry '" + name + "' is implausibly large");
            data = inflate_raw(payload, usize);
        } else {
            throw FormatError("unsupported zip compression method " +
                              std::to_string(method) + " for entry '" + name + "'");
        }
        std::uint32_t got = static_cast<std::uint32_t>(
            crc32(0, reinterpret_cast<const Bytef*>(data.data()), static_cast<uInt>(data.size())));
        if (got != crc)
            throw FormatError("crc mismatch for entry '" + name + "'");
        entries.push_back({std::move(name), std::move(data)});
    }
    return entries;
}

std::string write_zip(const std::vector<ZipEntry>& entries) {
    std::string out;
    std::string central;
    for (const ZipEntry& e : entries) {
        std::uint32_t off = static_cast<std::uint32_t>(out.size());
        std::uint32_t crc = static_cast<std::uint32_t>(
            crc32(0, reinterpret_cast<const Bytef*>(e.data.data()),
                  static_cast<uInt>(e.data.size())));
        std::uint32_t sz = static_cast<std::uint32_t>(e.data.size());

        put_u32(out, kLocalSig);
        put_u16(out, 20);
        put_u16(out, 0); // flags
        put_u16(out, 0); // stored
        put_u32(out, 0); // time/date
        put_u32(out, crc);
        put_u32(out, sz);
        put_u32(out, sz);
        put_u16(out, static_cast<std::uint16_t>(e.name.size()));
        put_u16(out, 0);
        out += e.name;
        out += e.data;

        put_u32(central, kCentralSig);
        put_u16(central, 20);
        put_u16(central, 20);
        put_u16(central, 0);
        put_u16(central, 0);
        put_u32(central, 0);
        put_u32(central, crc);
        put_u32(central, sz);
        put_u32(central, sz);
        put_u16(central, static_cast<std::uint16_t>(e.name.size()));
        put_u16(central, 0);
        put_u16(central, 0);
        put_u16(central, 0);
        put_u16(central, 0);
        put_u32(central, 0);
        put_u32(central, off);
        central += e.name;
    }
    std::uint32_t cd_off = static_cast<std::uint32_t>(out.size());
    out += central;
    put_u32(out, kEocdSig);
    put_u16(out, 0);
    put_u16(out, 0);
    put_u16(out, static_cast<std::uint16_t>(entries.size()));
    put_u16(out, static_cast<std::uint16_t>(entries.size()));
    put_u32(out, static_cast<std::uint32_t>(central.size()));
    put_u32(out, cd_off);
    put_u16(out, 0);
    return out;
}

std::vector<Vec> frames_from_array(const NpyArray& arr, const std::string& name) {
    if (arr.shape.size() != 3)
        throw FormatError("entry '" + name + "' must have shape (frames, particles, axes)");
    size_t T = arr.shape[0], n = arr.shape[1], d = arr.shape[2];
    std::vector<Vec> frames(T);
    for (size_t f = 0; f < T; ++f)
        frames[f].assign(arr.values.begin() + static_cast<long>(f * n * d),
                         arr.values.begin() + static_cast<long>((f + 1) * n * d));
    return frames;
}

} // namespace

TrajectoryDataset read_npz(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::string raw((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());

    std::vector<ZipEntry> entries = read_zip(raw);
    auto find = [&](const std::string& base) -> const ZipEntry* {
        for (const ZipEntry& e : entries)
            if (e.name == base + ".npy" || e.name == base) return &e;
        return nullptr;
    };

    const ZipEntry* r_entry = find("R");
    if (!r_entry) throw FormatError("archive is missing the positions entry 'R'");

    TrajectoryDataset ds;
    NpyArray R = parse_npy(r_entry->data);
    if (R.shape.size() != 3)
        throw FormatError("entry 'R' must have shape (frames, particles, axes)");
    ds.n_particles = static_cast<int>(R.shape[1]);
    ds.spatial_dim = static_cast<int>(R.shape[2]);
    ds.positions = frames_from_array(R, "R");

    if (const ZipEntry* f = find("F")) {
        NpyArray F = parse_npy(f->data);
        if (F.shape != R.shape)
            throw FormatError("entry 'F' shape differs from 'R'");
        ds.forces = frames_from_array(F, "F");
    }
    if (const ZipEntry* e = find("E")) {
        NpyArray E = parse_npy(e->data);
        size_t count = E.values.size();
        if (count != R.shape[0])
            throw FormatError("entry 'E' length differs from frame count");
        ds.energies = E.values;
    }
    if (const ZipEntry* z = find("z")) {
        NpyArray Z = parse_npy(z->data);
        if (Z.values.size() != R.shape[1])
            throw FormatError("entry 'z' length differs from particle count");
        ds.atomic_numbers.reserve(Z.values.size());
        for (double v : Z.values) ds.atomic_numbers.push_back(static_cast<long>(v));
    }
    ds.validate();
    return ds;
}

void write_npz(const std::string& path, const TrajectoryDataset& dataset) {
    dataset.validate();
    size_t T = dataset.n_frames();
    size_t n = static_cast<size_t>(dataset.n_particles);
    size_t d = static_cast<size_t>(dataset.spatial_dim);

    auto flatten = [&](const std::vector<Vec>& frames) {
        Vec flat;
        flat.reserve(T * n * d);
        for (const Vec& f : frames) flat.insert(flat.end(), f.begin(), f.end());
        return flat;
    };

    std::vector<ZipEntry> entries;
    Vec rf = flatten(dataset.positions);
    entries.push_back({"R.npy", make_npy({T, n, d}, "<f8", rf.data(), 8)});
    if (!dataset.forces.empty()) {
        Vec ff = flatten(dataset.forces);
        entries.push_back({"F.npy", make_npy({T, n, d}, "<f8", ff.data(), 8)});
    }
    if (!dataset.energies.empty())
        entries.push_back(
            {"E.npy", make_npy({T}, "<f8", dataset.energies.data(), 8)});
    if (!dataset.atomic_numbers.empty()) {
        std::vector<std::int64_t> z(dataset.atomic_numbers.begin(),
                                    dataset.atomic_numbers.end());
        entries.push_back({"z.npy", make_npy({n}, "<i8", z.data(), 8)});
    }

    std::string blob = write_zip(entries);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + path + "'");
    out.write(blob.data(), static_cast<long>(blob.size()));
    if (!out) throw DataError("write failed for '" + path + "'");
}

void SplitSpec::validate() const {
    if (mode == SplitMode::FirstK) {
        if (k < 0) throw ConfigError("split: k must be >= 0");
    } else {
        if (!(fraction > 0.0 && fraction <= 1.0))
            throw ConfigError("split: fraction must lie in (0, 1]");
    }
}

std::pair<TrajectoryDataset, TrajectoryDataset> make_split(
    const TrajectoryDataset& dataset, const SplitSpec& spec) {
    spec.validate();
    size_t T = dataset.n_frames();

    std::vector<char> in_train(T, 0);
    if (spec.mode == SplitMode::FirstK) {
        if (static_cast<size_t>(spec.k) > T)
            throw DataError("split: k exceeds the number of frames (" +
                              std::to_string(T) + ")");
        std::fill(in_train.begin(), in_train.begin() + spec.k, 1);
    } else {
        size_t m = static_cast<size_t>(
            std::llround(spec.fraction * static_cast<double>(T)));
        m = std::min(m, T);
        std::vector<size_t> idx(T);
        std::iota(idx.begin(), idx.end(), size_t{0});
        std::mt19937_64 rng = make_rng(spec.seed, 0x73706c6974ull);
        std::shuffle(idx.begin(), idx.end(), rng);
        for (size_t i = 0; i < m; ++i) in_train[idx[i]] = 1;
    }

    TrajectoryDataset train, holdout;
    for (TrajectoryDataset* part : {&train, &holdout}) {
        part->n_particles = dataset.n_particles;
        part->spatial_dim = dataset.spatial_dim;
        part->atomic_numbers = dataset.atomic_numbers;
    }
    for (size_t f = 0; f < T; ++f) {
        TrajectoryDataset& dst = in_train[f] ? train : holdout;
        dst.positions.push_back(dataset.positions[f]);
        if (!dataset.forces.empty()) dst.forces.push_back(dataset.forces[f]);
        if (!dataset.energies.empty()) dst.energies.push_back(dataset.energies[f]);
    }
    return {std::move(train), std::move(holdout)};
}

void write_sample_csv(const std::string& path, const SampleSet& samples) {
    samples.validate();
    static const char* axes[] = {"x", "y", "z"};
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write '" + path + "'");
    out.precision(17);
    for (int p = 0; p < samples.n_particles; ++p)
        for (int a = 0; a < samples.spatial_dim; ++a) {
            if (p || a) out << ',';
            std::string axis = a < 3 ? axes[a] : "a" + std::to_string(a);
            out << 'p' << p << '_' << axis;
        }
    out << '\n';
    for (const Vec& c : samples.configurations) {
        for (size_t i = 0; i < c.size(); ++i) {
            if (i) out << ',';
            out << c[i];
        }
        out << '\n';
    }
    if (!out) throw DataError("write failed for '" + path + "'");
}

SampleSet read_sample_csv(const std::string& path, int n_particles,
                          int spatial_dim) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    SampleSet out;
    out.n_particles = n_particles;
    out.spatial_dim = spatial_dim;
    std::string line;
    if (!std::getline(in, line)) throw FormatError("csv is empty");
    size_t dim = static_cast<size_t>(n_particles) * spatial_dim;
    long lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        Vec row;
        row.reserve(dim);
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            try {
                row.push_back(std::stod(tok));
            } catch (const std::logic_error&) {
                throw FormatError("csv line " + std::to_string(lineno) +
                                  ": non-numeric field '" + tok + "'");
            }
        }
        if (row.size() != dim)
            throw FormatError("csv line " + std::to_string(lineno) + ": expected " +
                              std::to_string(dim) + " fields, got " +
                              std::to_string(row.size()));
        out.configurations.push_back(std::move(row));
    }
    return out;
}

} // namespace psm
