#include "bvote/crypto.hpp"

#include <bit>
#include <cstring>

namespace bvote::crypto {

namespace {

// ---------------------------------------------------------------------------
// AES-128 primitives
// ---------------------------------------------------------------------------

constexpr uint8_t xtime(uint8_t b) {
    return static_cast<uint8_t>((b << 1) ^ ((b & 0x80) ? 0x1b : 0x00));
}

constexpr uint8_t gmul(uint8_t a, uint8_t b) {
    uint8_t p = 0;
    for (int i = 0; i < 8; ++i) {
        if (b & 1) p ^= a;
        a = xtime(a);
        b >>= 1;
    }
    return p;
}

constexpr uint8_t rotl8(uint8_t x, int n) {
    return static_cast<uint8_t>((x << n) | (x >> (8 - n)));
}

// Forward S-box generated from the multiplicative inverse in GF(2^8) followed
// by the affine transform; the inverse box is its permutation inverse.
struct SboxTables {
    std::array<uint8_t, 256> fwd{};
    std::array<uint8_t, 256> inv{};
};

constexpr SboxTables make_sboxes() {
    SboxTables t{};
    uint8_t p = 1, q = 1;
    do {
        p = static_cast<uint8_t>(p ^ (p << 1) ^ ((p & 0x80) ? 0x1b : 0));  // p *= 3
        q ^= static_cast<uint8_t>(q << 1);                                 // q /= 3
        q ^= static_cast<uint8_t>(q << 2);
        q ^= static_cast<uint8_t>(q << 4);
        if (q & 0x80) q ^= 0x09;
        uint8_t s = static_cast<uint8_t>(q ^ rotl8(q, 1) ^ rotl8(q, 2) ^ rotl8(q, 3) ^ rotl8(q, 4) ^ 0x63);
        t.fwd[p] = s;
    } while (p != 1);
    t.fwd[0] = 0x63;  // zero has no inverse
    for (int i = 0; i < 256; ++i) t.inv[t.fwd[i]] = static_cast<uint8_t>(i);
    return t;
}

constexpr SboxTables kSbox = make_sboxes();

constexpr std::array<uint8_t, 10> kRcon = {0x01, 0x02, 0x04, 0x08, 0x10,
                                           0x20, 0x40, 0x80, 0x1b, 0x36};

using State = std::array<uint8_t, kBlockSize>;  // column-major, FIPS order

void add_round_key(State& s, const uint8_t* rk) {
    for (size_t i = 0; i < kBlockSize; ++i) s[i] ^= rk[i];
}

void sub_bytes(State& s) {
    for (auto& b : s) b = kSbox.fwd[b];
}

void inv_sub_bytes(State& s) {
    for (auto& b : s) b = kSbox.inv[b];
}

// Row r of the state lives at indices r, r+4, r+8, r+12.
void shift_rows(State& s) {
    State t = s;
    for (int r = 1; r < 4; ++r)
        for (int c = 0; c < 4; ++c) s[r + 4 * c] = t[r + 4 * ((c + r) % 4)];
}

void inv_shift_rows(State& s) {
    State t = s;
    for (int r = 1; r < 4; ++r)
        for (int c = 0; c < 4; ++c) s[r + 4 * ((c + r) % 4)] = t[r + 4 * c];
}

void mix_columns(State& s) {
    for (int c = 0; c < 4; ++c) {
        uint8_t* col = s.data() + 4 * c;
        uint8_t a0 = col[0], a1 = col[1], a2 = col[2], a3 = col[3];
        col[0] = static_cast<uint8_t>(xtime(a0) ^ xtime(a1) ^ a1 ^ a2 ^ a3);
        col[1] = static_cast<uint8_t>(a0 ^ xtime(a1) ^ xtime(a2) ^ a2 ^ a3);
        col[2] = static_cast<uint8_t>(a0 ^ a1 ^ xtime(a2) ^ xtime(a3) ^ a3);
        col[3] = static_cast<uint8_t>(xtime(a0) ^ a0 ^ a1 ^ a2 ^ xtime(a3));
    }
}

void inv_mix_columns(State& s) {
    for (int c = 0; c < 4; ++c) {
        uint8_t* col = s.data() + 4 * c;
        uint8_t a0 = col[0], a1 = col[1], a2 = col[2], a3 = col[3];
        col[0] = static_cast<uint8_t>(gmul(a0, 0x0e) ^ gmul(a1, 0x0b) ^ gmul(a2, 0x0d) ^ gmul(a3, 0x09));
        col[1] = static_cast<uint8_t>(gmul(a0, 0x09) ^ gmul(a1, 0x0e) ^ gmul(a2, 0x0b) ^ gmul(a3, 0x0d));
        col[2] = static_cast<uint8_t>(gmul(a0, 0x0d) ^ gmul(a1, 0x09) ^ gmul(a2, 0x0e) ^ gmul(a3, 0x0b));
        col[3] = static_cast<uint8_t>(gmul(a0, 0x0b) ^ gmul(a1, 0x0d) ^ gmul(a2, 0x09) ^ gmul(a3, 0x0e));
    }
}

// ---------------------------------------------------------------------------
// SHA-256
// ---------------------------------------------------------------------------

constexpr std::array<uint32_t, 64> kSha256K = {
    0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1, 0x923f82a4, 0xab1c5ed5,
    0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3, 0x72be5d74, 0x80deb1fe, 0x9bdc06a7, 0xc19bf174,
    0xe49b69c1, 0xefbe4786, 0x0fc19dc6, 0x240ca1cc, 0x2de92c6f, 0x4a7484aa, 0x5cb0a9dc, 0x76f988da,
    0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7, 0xc6e00bf3, 0xd5a79147, 0x06ca6351, 0x14292967,
    0x27b70a85, 0x2e1b2138, 0x4d2c6dfc, 0x53380d13, 0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85,
    0xa2bfe8a1, 0xa81a664b, 0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070,
    0x19a4c116, 0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a, 0x5b9cca4f, 0x682e6ff3,
    0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208, 0x90befffa, 0xa4506ceb, 0xbef9a3f7, 0xc67178f2};

struct Sha256 {
    std::array<uint32_t, 8> h = {0x6a09e667, 0xbb67ae85, 0x3c6ef372, 0xa54ff53a,
                                 0x510e527f, 0x9b05688c, 0x1f83d9ab, 0x5be0cd19};
    std::array<uint8_t, 64> block{};
    size_t block_len = 0;
    uint64_t total_len = 0;

    void compress(const uint8_t* p) {
        uint32_t w[64];
        for (int i = 0; i < 16; ++i) {
            w[i] = (static_cast<uint32_t>(p[4 * i]) << 24) | (static_cast<uint32_t>(p[4 * i + 1]) << 16) |
                   (static_cast<uint32_t>(p[4 * i + 2]) << 8) | static_cast<uint32_t>(p[4 * i + 3]);
        }
        for (int i = 16; i < 64; ++i) {
            uint32_t s0 = std::rotr(w[i - 15], 7) ^ std::rotr(w[i - 15], 18) ^ (w[i - 15] >> 3);
            uint32_t s1 = std::rotr(w[i - 2], 17) ^ std::rotr(w[i - 2], 19) ^ (w[i - 2] >> 10);
            w[i] = w[i - 16] + s0 + w[i - 7] + s1;
        }
        uint32_t a = h[0], b = h[1], c = h[2], d = h[3], e = h[4], f = h[5], g = h[6], hh = h[7];
        for (int i = 0; i < 64; ++i) {
            uint32_t s1 = std::rotr(e, 6) ^ std::rotr(e, 11) ^ std::rotr(e, 25);
            uint32_t ch = (e & f) ^ (~e & g);
            uint32_t t1 = hh + s1 + ch + kSha256K[i] + w[i];
            uint32_t s0 = std::rotr(a, 2) ^ std::rotr(a, 13) ^ std::rotr(a, 22);
            uint32_t maj = (a & b) ^ (a & c) ^ (b & c);
            uint32_t t2 = s0 + maj;
            hh = g;
            g = f;
            f = e;
            e = d + t1;
            d = c;
            c = b;
            b = a;
            a = t1 + t2;
        }
        h[0] += a;
        h[1] += b;
        h[2] += c;
        h[3] += d;
        h[4] += e;
        h[5] += f;
        h[6] += g;
        h[7] += hh;
    }

    void update(std::span<const uint8_t> data) {
        total_len += data.size();
        size_t off = 0;
        if (block_len > 0) {
            size_t n = std::min(data.size(), 64 - block_len);
            std::memcpy(block.data() + block_len, data.data(), n);
            block_len += n;
            off = n;
            if (block_len == 64) {
                compress(block.data());
                block_len = 0;
            }
        }
        while (off + 64 <= data.size()) {
            compress(data.data() + off);
            off += 64;
        }
        if (off < data.size()) {
            block_len = data.size() - off;
            std::memcpy(block.data(), data.data() + off, block_len);
        }
    }

    Digest256 finish() {
        uint64_t bit_len = total_len * 8;
        uint8_t pad = 0x80;
        update({&pad, 1});
        uint8_t zero = 0;
        while (block_len != 56) update({&zero, 1});
        std::array<uint8_t, 8> len_be{};
        for (int i = 0; i < 8; ++i) len_be[i] = static_cast<uint8_t>(bit_len >> (56 - 8 * i));
        update(len_be);
        Digest256 out;
        for (int i = 0; i < 8; ++i) {
            out.bytes[4 * i] = static_cast<uint8_t>(h[i] >> 24);
            out.bytes[4 * i + 1] = static_cast<uint8_t>(h[i] >> 16);
            out.bytes[4 * i + 2] = static_cast<uint8_t>(h[i] >> 8);
            out.bytes[4 * i + 3] = static_cast<uint8_t>(h[i]);
        }
        return out;
    }
};

}  // namespace

Aes128::Aes128(const Aes128Key& key) {
    std::memcpy(round_keys_.data(), key.bytes.data(), kBlockSize);
    size_t total = round_keys_.size();
    for (size_t off = kBlockSize; off < total; off += 4) {
        std::array<uint8_t, 4> t;
        std::memcpy(t.data(), round_keys_.data() + off - 4, 4);
        if (off % kBlockSize == 0) {
            // RotWord + SubWord + Rcon
            uint8_t first = t[0];
            t[0] = kSbox.fwd[t[1]];
            t[1] = kSbox.fwd[t[2]];
            t[2] = kSbox.fwd[t[3]];
            t[3] = kSbox.fwd[first];
            t[0] ^= kRcon[off / kBlockSize - 1];
        }
        for (int i = 0; i < 4; ++i) round_keys_[off + i] = round_keys_[off - kBlockSize + i] ^ t[i];
    }
}

void Aes128::encrypt_block(std::span<const uint8_t> in, std::span<uint8_t> out) const {
    if (in.size() != kBlockSize || out.size() != kBlockSize)
        throw ContractError("aes128_encrypt_block: block must be exactly 16 bytes");
    State s;
    std::memcpy(s.data(), in.data(), kBlockSize);
    add_round_key(s, round_keys_.data());
    for (int round = 1; round <= 9; ++round) {
        sub_bytes(s);
        shift_rows(s);
        mix_columns(s);
        add_round_key(s, round_keys_.data() + kBlockSize * round);
    }
    sub_bytes(s);
    shift_rows(s);
    add_round_key(s, round_keys_.data() + kBlockSize * 10);
    std::memcpy(out.data(), s.data(), kBlockSize);
}

void Aes128::decrypt_block(std::span<const uint8_t> in, std::span<uint8_t> out) const {
    if (in.size() != kBlockSize || out.size() != kBlockSize)
        throw ContractError("aes128_decrypt_block: block must be exactly 16 bytes");
    State s;
    std::memcpy(s.data(), in.data(), kBlockSize);
    add_round_key(s, round_keys_.data() + kBlockSize * 10);
    for (int round = 9; round >= 1; --round) {
        inv_shift_rows(s);
        inv_sub_bytes(s);
        add_round_key(s, round_keys_.data() + kBlockSize * round);
        inv_mix_columns(s);
    }
    inv_shift_rows(s);
    inv_sub_bytes(s);
    add_round_key(s, round_keys_.data());
    std::memcpy(out.data(), s.data(), kBlockSize);
}

std::array<uint8_t, kBlockSize> aes128_encrypt_block(const Aes128Key& key,
                                                     std::span<const uint8_t> block) {
    std::array<uint8_t, kBlockSize> out;
    Aes128(key).encrypt_block(block, out);
    return out;
}

std::array<uint8_t, kBlockSize> aes128_decrypt_block(const Aes128Key& key,
                                                     std::span<const uint8_t> block) {
    std::array<uint8_t, kBlockSize> out;
    Aes128(key).decrypt_block(block, out);
    return out;
}

Bytes encrypt_packet(const Aes128Key& key, const Iv128& iv, std::span<const uint8_t> plaintext) {
    if (plaintext.empty()) throw ContractError("encrypt_packet: plaintext must be non-empty");
    Aes128 cipher(key);
    size_t pad = kBlockSize - plaintext.size() % kBlockSize;  // 1..16
    Bytes padded(plaintext.begin(), plaintext.end());
    padded.insert(padded.end(), pad, static_cast<uint8_t>(pad));

    Bytes out(padded.size());
    std::array<uint8_t, kBlockSize> chain = iv.bytes;
    for (size_t off = 0; off < padded.size(); off += kBlockSize) {
        std::array<uint8_t, kBlockSize> x;
        for (size_t i = 0; i < kBlockSize; ++i) x[i] = padded[off + i] ^ chain[i];
        cipher.encrypt_block(x, {out.data() + off, kBlockSize});
        std::memcpy(chain.data(), out.data() + off, kBlockSize);
    }
    return out;
}

Bytes decrypt_packet(const Aes128Key& key, const Iv128& iv, std::span<const uint8_t> ciphertext) {
    if (ciphertext.empty() || ciphertext.size() % kBlockSize != 0)
        throw MalformedCiphertext("ciphertext length is not a positive multiple of 16");
    Aes128 cipher(key);
    Bytes plain(ciphertext.size());
    std::array<uint8_t, kBlockSize> chain = iv.bytes;
    for (size_t off = 0; off < ciphertext.size(); off += kBlockSize) {
        std::array<uint8_t, kBlockSize> x;
        cipher.decrypt_block(ciphertext.subspan(off, kBlockSize), x);
        for (size_t i = 0; i < kBlockSize; ++i) plain[off + i] = x[i] ^ chain[i];
        std::memcpy(chain.data(), ciphertext.data() + off, kBlockSize);
    }
    uint8_t pad = plain.back();
    if (pad < 1 || pad > kBlockSize) throw PaddingError("invalid PKCS#7 pad length");
    for (size_t i = plain.size() - pad; i < plain.size(); ++i)
        if (plain[i] != pad) throw PaddingError("inconsistent PKCS#7 padding bytes");
    plain.resize(plain.size() - pad);
    return plain;
}

Digest256 checksum(std::span<const uint8_t> data) {
    Sha256 h;
    h.update(data);
    return h.finish();
}

Digest256 chain_hash(const Digest256& prev, std::span<const uint8_t> entry_bytes) {
    Sha256 h;
    h.update(prev.bytes);
    h.update(entry_bytes);
    return h.finish();
}

Digest256 hmac_sha256(std::span<const uint8_t> key, std::span<const uint8_t> message) {
    std::array<uint8_t, 64> k{};
    if (key.size() > 64) {
        Digest256 kd = checksum(key);
        std::memcpy(k.data(), kd.bytes.data(), kDigestSize);
    } else {
        std::memcpy(k.data(), key.data(), key.size());
    }
    std::array<uint8_t, 64> ipad, opad;
    for (int i = 0; i < 64; ++i) {
        ipad[i] = k[i] ^ 0x36;
        opad[i] = k[i] ^ 0x5c;
    }
    Sha256 inner;
    inner.update(ipad);
    inner.update(message);
    Digest256 inner_digest = inner.finish();
    Sha256 outer;
    outer.update(opad);
    outer.update(inner_digest.bytes);
    return outer.finish();
}

Digest256 device_mac(const Aes128Key& device_key, const Digest256& entry_hash) {
    return hmac_sha256(device_key.bytes, entry_hash.bytes);
}

}  // namespace bvote::crypto
