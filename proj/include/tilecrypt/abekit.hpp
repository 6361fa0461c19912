#pragma once

// Policy-gated key encapsulation with ciphertext-policy semantics.
//
// A trusted authority derives one symmetric key per attribute. A
// ciphertext splits a fresh content secret down its access tree with
// Shamir threshold sharing over a 256-bit prime field; every leaf share is
// wrapped under its attribute's key and the payload is sealed with
// AES-256-GCM under a key derived from the secret. Attribute keys do not
// depend on the user, so colluding users can pool attributes.

#include <array>
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tilecrypt/bitstream.hpp"

namespace tilecrypt::abekit {

using Key32 = std::array<std::uint8_t, 32>;
using Nonce = std::array<std::uint8_t, 12>;
using AttributeSet = std::set<std::string, std::less<>>;

enum class ErrorKind {
    EmptyAttributeSet,
    InvalidPolicy,
    PolicyParseError,
    PolicyUnsatisfied,
    CorruptCiphertext,
    MalformedBlob,
    MalformedKeyFile,
    AuthorityMismatch,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what);
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

struct PolicyNode {
    enum class Kind : std::uint8_t { Leaf = 1, Gate = 2 };

    Kind kind = Kind::Leaf;
    std::string attribute;       // Leaf only
    std::size_t threshold = 0;   // Gate only
    std::vector<PolicyNode> children;

    static PolicyNode leaf(std::string attribute);
    static PolicyNode gate(std::size_t threshold, std::vector<PolicyNode> children);
    static PolicyNode all_of(std::vector<PolicyNode> children);
    static PolicyNode any_of(std::vector<PolicyNode> children);

    bool is_leaf() const { return kind == Kind::Leaf; }
    friend bool operator==(const PolicyNode&, const PolicyNode&) = default;
};

class AccessPolicy {
public:
    // Throws InvalidPolicy when a gate threshold or attribute is out of range.
    explicit AccessPolicy(PolicyNode root);

    const PolicyNode& root() const { return root_; }
    std::size_t leaf_count() const;
    // Leaves in depth-first order; a wrapped share refers to its leaf by
    // position in this list.
    std::vector<const PolicyNode*> leaves() const;
    std::size_t depth() const;

    Bytes serialize() const;
    static AccessPolicy deserialize(ByteView bytes);
    std::string to_text() const;

    friend bool operator==(const AccessPolicy& a, const AccessPolicy& b) { return a.root_ == b.root_; }

private:
    PolicyNode root_;
};

// Text form: `attr`, `and(a,b)`, `or(a,b)`, `2of(a,b,c)`; nesting allowed.
AccessPolicy parse_policy(std::string_view text);

bool satisfies(const PolicyNode& node, const AttributeSet& attrs);
inline bool satisfies(const AccessPolicy& policy, const AttributeSet& attrs) { return satisfies(policy.root(), attrs); }

struct PublicParams {
    std::array<std::uint8_t, 16> system_id{};
    std::uint32_t version = 1;

    Bytes serialize() const;
    static PublicParams deserialize(ByteView bytes);
    friend bool operator==(const PublicParams&, const PublicParams&) = default;
};

// Attribute-key derivation handed to encryptors.
class AttributeAuthority {
public:
    AttributeAuthority(const Key32& attribute_seed, const std::array<std::uint8_t, 16>& system_id)
        : seed_(attribute_seed), system_id_(system_id) {}

    Key32 attribute_key(std::string_view attribute) const;
    const std::array<std::uint8_t, 16>& system_id() const { return system_id_; }

private:
    Key32 seed_;
    std::array<std::uint8_t, 16> system_id_;
};

struct MasterKey {
    Key32 master_secret{};
    Key32 attribute_seed{};

    PublicParams public_params() const;
    AttributeAuthority authority() const;

    Bytes serialize() const;
    static MasterKey deserialize(ByteView bytes);
    friend bool operator==(const MasterKey&, const MasterKey&) = default;
};

struct PrivateKey {
    std::string user_id;
    std::map<std::string, Key32, std::less<>> attribute_keys;

    AttributeSet attributes() const;
    Bytes serialize() const;
    static PrivateKey deserialize(ByteView bytes);
    friend bool operator==(const PrivateKey&, const PrivateKey&) = default;
};

struct AuthorityKeys {
    MasterKey master;
    PublicParams params;
};

AuthorityKeys setup(const Key32& seed);
// Condenses arbitrary seed material (a seed file, a decimal seed) to a setup seed.
Key32 seed_from_bytes(ByteView material);
PrivateKey keygen(const MasterKey& mk, std::string user_id, const AttributeSet& attrs);

// Wire layout (little-endian lengths):
//   magic(4) | version(1) | policy_len(2) | policy | nonce(12) |
//   share_count(2) | shares(64 each) | ct_len(4) | ciphertext
// A share is leaf_index(2) | share_index(2) | wrap_nonce(12) | sealed share(48).
inline constexpr std::array<std::uint8_t, 4> kBlobMagic{0xAB, 'A', 'B', 'E'};
inline constexpr std::uint8_t kBlobVersion = 1;
inline constexpr std::size_t kBlobFixedOverhead = 4 + 1 + 2 + 12 + 2 + 4;
inline constexpr std::size_t kShareWireSize = 64;
inline constexpr std::size_t kTagSize = 16;

struct WrappedShare {
    std::uint16_t leaf_index = 0;
    std::uint16_t share_index = 0;  // child ordinal within the parent gate, 0 for a root leaf
    Nonce wrap_nonce{};
    std::array<std::uint8_t, 48> sealed{};
};

struct EncryptedBlob {
    std::uint8_t version = kBlobVersion;
    AccessPolicy policy;
    Nonce nonce{};
    std::vector<WrappedShare> shares;
    Bytes ciphertext;  // plaintext length + kTagSize

    Bytes serialize() const;
    static EncryptedBlob parse(ByteView wire);
    std::size_t plaintext_size() const { return ciphertext.size() - kTagSize; }
};

// Cheap checks used when scanning media for sealed payloads.
bool looks_like_blob(ByteView bytes);
// Plaintext length recorded in a serialized blob header. Throws MalformedBlob.
std::size_t blob_plaintext_size(ByteView wire);

std::size_t header_size(const AccessPolicy& policy);
// Bytes a blob adds on top of its plaintext: header plus authentication tag.
std::size_t blob_overhead(const AccessPolicy& policy);

EncryptedBlob encrypt(const PublicParams& pp, const AttributeAuthority& authority, const AccessPolicy& policy,
                      ByteView plaintext, ByteView rng_seed);
Bytes decrypt(const PrivateKey& sk, const EncryptedBlob& blob);
Bytes decrypt(const PrivateKey& sk, ByteView wire);

}  // namespace tilecrypt::abekit
