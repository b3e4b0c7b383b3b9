#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace bvote {

struct CryptoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
/// Ciphertext is structurally invalid (not a positive multiple of the block size).
struct MalformedCiphertext : CryptoError {
    using CryptoError::CryptoError;
};
/// PKCS#7 tail failed validation after decryption: tampering or wrong key.
struct PaddingError : CryptoError {
    using CryptoError::CryptoError;
};

/// Registry blob failed its magic, padding, or embedded checksum on load.
struct RegistryCorrupt : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Registry state-transition misuse (marking an unknown or already-voted uid).
struct RegistryError : std::logic_error {
    enum class Kind { UnknownVoter, AlreadyVoted };
    RegistryError(Kind k, const std::string& msg) : std::logic_error(msg), kind(k) {}
    Kind kind;
};

struct MalformedPacket : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct StorageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Interior log damage detected; carries the first failing sequence number.
struct TamperedError : std::runtime_error {
    TamperedError(uint32_t seq, const std::string& msg) : std::runtime_error(msg), seq_no(seq) {}
    uint32_t seq_no;
};

struct JournalCorrupt : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Precondition violation on a library call (caller bug, not input data).
struct ContractError : std::logic_error {
    using std::logic_error::logic_error;
};

}  // namespace bvote
