#include "sdmrg/dmrg/checkpoint.hpp"

#include <boost/crc.hpp>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace sdmrg {
namespace {

constexpr char kMagic[8] = {'S', 'D', 'M', 'R', 'G', 'C', 'K', 'P'};

enum Tag : std::uint32_t {
    kHead = 0x44414548,  // "HEAD"
    kBlock = 0x4b4f4c42,  // "BLOK"
    kWave = 0x45564157,   // "WAVE"
    kRecords = 0x53434552,  // "RECS"
    kEnd = 0x21444e45,    // "END!"
};

std::uint32_t crc32(const std::uint8_t* p, std::size_t n) {
    boost::crc_32_type c;
    c.process_bytes(p, n);
    return c.checksum();
}

class Writer {
public:
    std::vector<std::uint8_t> bytes;

    void u8(std::uint8_t v) { bytes.push_back(v); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
    void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

    void qn(const QuantumNumber& q) {
        i32(q.c[0]);
        i32(q.c[1]);
    }
    void basis(const SectorBasis& b) {
        u32(static_cast<std::uint32_t>(b.size()));
        for (const auto& e : b.entries()) {
            qn(e.qn);
            i64(e.dim);
        }
    }
    void doubles(const double* p, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) f64(p[i]);
    }
    void matrix(const SectorMatrix& m) {
        basis(m.row_basis());
        basis(m.col_basis());
        qn(m.delta());
        u32(static_cast<std::uint32_t>(m.block_count()));
        for (const auto& [key, blk] : m.blocks()) {
            qn(key.row);
            qn(key.col);
            i64(blk.rows());
            i64(blk.cols());
            doubles(blk.data(), static_cast<std::size_t>(blk.size()));
        }
    }
    void section(std::uint32_t tag, const Writer& payload) {
        u32(tag);
        u64(payload.bytes.size());
        bytes.insert(bytes.end(), payload.bytes.begin(), payload.bytes.end());
        u32(crc32(payload.bytes.data(), payload.bytes.size()));
    }
};

class Reader {
public:
    Reader(const std::uint8_t* p, std::size_t n) : p_(p), n_(n) {}

    bool done() const { return pos_ == n_; }
    const std::uint8_t* take(std::size_t k) {
        if (k > n_ - pos_) throw CheckpointCorrupt("checkpoint: unexpected end of data");
        const std::uint8_t* r = p_ + pos_;
        pos_ += k;
        return r;
    }
    std::uint8_t u8() { return *take(1); }
    std::uint32_t u32() {
        const auto* b = take(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        const auto* b = take(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
        return v;
    }
    std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
    std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
    double f64() { return std::bit_cast<double>(u64()); }

    QuantumNumber qn() {
        const auto a = i32();
        const auto b = i32();
        return {a, b};
    }
    std::size_t count(std::size_t unit) {
        const std::uint32_t c = u32();
        if (static_cast<std::uint64_t>(c) * unit > n_ - pos_) throw CheckpointCorrupt("checkpoint: bad count");
        return c;
    }
    Index dim() {
        const std::int64_t d = i64();
        if (d < 0 || static_cast<std::uint64_t>(d) > n_) throw CheckpointCorrupt("checkpoint: bad dimension");
        return static_cast<Index>(d);
    }
    SectorBasis basis() {
        std::vector<std::pair<QuantumNumber, Index>> s(count(16));
        for (auto& e : s) {
            e.first = qn();
            e.second = dim();
        }
        try {
            return SectorBasis(std::move(s));
        } catch (const SectorError& e) {
            throw CheckpointCorrupt(std::string("checkpoint: ") + e.what());
        }
    }
    void doubles(double* p, std::size_t n) {
        if (n > (n_ - pos_) / 8) throw CheckpointCorrupt("checkpoint: unexpected end of data");
        for (std::size_t i = 0; i < n; ++i) p[i] = f64();
    }
    SectorMatrix matrix() {
        SectorBasis rows = basis();
        SectorBasis cols = basis();
        const QuantumNumber delta = qn();
        SectorMatrix m(std::move(rows), std::move(cols), delta);
        const std::size_t nb = count(32);
        for (std::size_t i = 0; i < nb; ++i) {
            BlockKey key;
            key.row = qn();
            key.col = qn();
            const Index r = dim(), c = dim();
            if (m.row_basis().dim(key.row) != r || m.col_basis().dim(key.col) != c || key.row != key.col + delta)
                throw CheckpointCorrupt("checkpoint: inconsistent operator block");
            Matrix blk(r, c);
            doubles(blk.data(), static_cast<std::size_t>(blk.size()));
            m.set_block(key, std::move(blk));
        }
        return m;
    }

private:
    const std::uint8_t* p_;
    std::size_t n_;
    std::size_t pos_ = 0;
};

void write_block(Writer& w, const BlockState& b) {
    w.u8(static_cast<std::uint8_t>(b.side));
    w.i32(b.bond);
    w.basis(b.basis);
    w.u32(static_cast<std::uint32_t>(b.ops.size()));
    for (const auto& op : b.ops) w.matrix(op);
    w.u8(b.has_transform ? 1 : 0);
    if (b.has_transform) w.matrix(b.transform);
}

BlockState read_block(Reader& r) {
    BlockState b;
    const auto side = r.u8();
    if (side > 1) throw CheckpointCorrupt("checkpoint: bad block side");
    b.side = static_cast<Side>(side);
    b.bond = r.i32();
    b.basis = r.basis();
    const std::size_t n = r.count(4);
    for (std::size_t i = 0; i < n; ++i) b.ops.push_back(r.matrix());
    b.has_transform = r.u8() != 0;
    if (b.has_transform) b.transform = r.matrix();
    return b;
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const EngineState& s) {
    Writer out;
    out.bytes.insert(out.bytes.end(), std::begin(kMagic), std::end(kMagic));
    out.u32(kCheckpointVersion);

    Writer head;
    head.u64(s.mpo_fingerprint);
    head.i32(s.n_sites);
    head.u64(s.seed);
    head.qn(s.target);
    head.u8(s.warmed_up ? 1 : 0);
    head.i32(s.cursor.sweep);
    head.u8(static_cast<std::uint8_t>(s.cursor.direction));
    head.i32(s.cursor.position);
    head.f64(s.warmup_energy);
    head.u32(static_cast<std::uint32_t>(s.warmup_energies.size()));
    head.doubles(s.warmup_energies.data(), s.warmup_energies.size());
    head.u32(static_cast<std::uint32_t>(s.left.size()));
    out.section(kHead, head);

    for (int side = 0; side < 2; ++side) {
        const auto& blocks = side == 0 ? s.left : s.right;
        for (std::size_t i = 0; i < blocks.size(); ++i) {
            if (!blocks[i]) continue;
            Writer w;
            write_block(w, *blocks[i]);
            out.section(kBlock, w);
        }
    }

    if (s.guess) {
        Writer w;
        const WaveLayout& lay = *s.guess->layout;
        w.basis(lay.left());
        w.basis(lay.right());
        w.qn(lay.target());
        w.u64(s.guess->data.size());
        w.doubles(s.guess->data.data(), s.guess->data.size());
        out.section(kWave, w);
    }

    Writer rec;
    rec.u32(static_cast<std::uint32_t>(s.records.size()));
    for (const auto& r : s.records) {
        rec.i32(r.sweep);
        rec.u8(static_cast<std::uint8_t>(r.direction));
        rec.i32(r.position);
        rec.f64(r.energy);
        rec.f64(r.truncation_error);
        rec.i32(r.lanczos_iterations);
        rec.u8(r.converged ? 1 : 0);
        rec.f64(r.seconds);
        rec.u64(r.flops);
    }
    out.section(kRecords, rec);
    out.section(kEnd, Writer{});
    return out.bytes;
}

EngineState decode_checkpoint(const std::vector<std::uint8_t>& bytes, const LocalBasis& site) {
    Reader top(bytes.data(), bytes.size());
    if (std::memcmp(top.take(sizeof kMagic), kMagic, sizeof kMagic) != 0)
        throw CheckpointCorrupt("checkpoint: not a checkpoint file");
    const std::uint32_t version = top.u32();
    if (version != kCheckpointVersion)
        throw CheckpointVersionError("checkpoint: unsupported version " + std::to_string(version));

    EngineState s;
    bool have_head = false, have_end = false;
    while (!top.done()) {
        const std::uint32_t tag = top.u32();
        const std::uint64_t len = top.u64();
        if (len > bytes.size()) throw CheckpointCorrupt("checkpoint: section length out of range");
        const std::uint8_t* payload = top.take(static_cast<std::size_t>(len));
        const std::uint32_t crc = top.u32();
        if (crc != crc32(payload, static_cast<std::size_t>(len)))
            throw CheckpointCorrupt("checkpoint: checksum mismatch");
        Reader r(payload, static_cast<std::size_t>(len));
        if (tag == kEnd) {
            have_end = true;
            if (!top.done()) throw CheckpointCorrupt("checkpoint: data after the end marker");
            break;
        }
        if (tag == kHead) {
            s.mpo_fingerprint = r.u64();
            s.n_sites = r.i32();
            s.seed = r.u64();
            s.target = r.qn();
            s.warmed_up = r.u8() != 0;
            s.cursor.sweep = r.i32();
            const auto dir = r.u8();
            if (dir > 1) throw CheckpointCorrupt("checkpoint: bad direction");
            s.cursor.direction = static_cast<Direction>(dir);
            s.cursor.position = r.i32();
            s.warmup_energy = r.f64();
            s.warmup_energies.resize(r.count(8));
            r.doubles(s.warmup_energies.data(), s.warmup_energies.size());
            const std::uint32_t nb = r.u32();
            if (s.n_sites < 2 || nb != static_cast<std::uint32_t>(s.n_sites) + 1)
                throw CheckpointCorrupt("checkpoint: bad chain length");
            s.left.resize(nb);
            s.right.resize(nb);
            have_head = true;
        } else if (!have_head) {
            throw CheckpointCorrupt("checkpoint: header section missing");
        } else if (tag == kBlock) {
            BlockState b = read_block(r);
            auto& slots = b.side == Side::left ? s.left : s.right;
            if (b.bond < 0 || static_cast<std::size_t>(b.bond) >= slots.size())
                throw CheckpointCorrupt("checkpoint: block bond out of range");
            slots[static_cast<std::size_t>(b.bond)] = std::move(b);
        } else if (tag == kWave) {
            SectorBasis l = r.basis();
            SectorBasis rb = r.basis();
            const QuantumNumber target = r.qn();
            auto layout = std::make_shared<const WaveLayout>(std::move(l), site, std::move(rb), target);
            Wavefunction w(layout);
            if (r.u64() != w.data.size()) throw CheckpointCorrupt("checkpoint: wavefunction size mismatch");
            r.doubles(w.data.data(), w.data.size());
            s.guess = std::move(w);
        } else if (tag == kRecords) {
            s.records.resize(r.count(46));
            for (auto& rec : s.records) {
                rec.sweep = r.i32();
                const auto dir = r.u8();
                if (dir > 1) throw CheckpointCorrupt("checkpoint: bad direction");
                rec.direction = static_cast<Direction>(dir);
                rec.position = r.i32();
                rec.energy = r.f64();
                rec.truncation_error = r.f64();
                rec.lanczos_iterations = r.i32();
                rec.converged = r.u8() != 0;
                rec.seconds = r.f64();
                rec.flops = r.u64();
            }
        } else {
            throw CheckpointCorrupt("checkpoint: unknown section");
        }
        if (!r.done()) throw CheckpointCorrupt("checkpoint: trailing bytes in section");
    }
    if (!have_head || !have_end) throw CheckpointCorrupt("checkpoint: truncated file");
    return s;
}

void write_checkpoint(const EngineState& state, const std::filesystem::path& path) {
    const auto bytes = encode_checkpoint(state);
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw CheckpointError("checkpoint: cannot open " + tmp.string());
        f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        f.flush();
        if (!f) throw CheckpointError("checkpoint: write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

EngineState read_checkpoint(const std::filesystem::path& path, const LocalBasis& site) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw CheckpointError("checkpoint: cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return decode_checkpoint(bytes, site);
}

}  // namespace sdmrg
