#include "primitives.hpp"

#include <algorithm>
#include <cstring>

namespace tilecrypt::abekit {

using detail::Fe;

namespace {

void put_u16(Bytes& out, std::uint16_t v)
{
    out.push_back(std::uint8_t(v));
    out.push_back(std::uint8_t(v >> 8));
}

void put_u32(Bytes& out, std::uint32_t v)
{
    for (int i = 0; i < 4; ++i) out.push_back(std::uint8_t(v >> (8 * i)));
}

std::uint16_t get_u16(ByteView b, std::size_t at) { return std::uint16_t(b[at] | (b[at + 1] << 8)); }

std::uint32_t get_u32(ByteView b, std::size_t at)
{
    return std::uint32_t(b[at]) | (std::uint32_t(b[at + 1]) << 8) | (std::uint32_t(b[at + 2]) << 16) |
           (std::uint32_t(b[at + 3]) << 24);
}

// Everything up to and including ct_len; authenticated as AAD of the payload.
Bytes header_bytes(const EncryptedBlob& blob, const Bytes& policy_bytes, std::size_t ct_len)
{
    Bytes out;
    out.reserve(kBlobFixedOverhead + policy_bytes.size() + kShareWireSize * blob.shares.size());
    out.insert(out.end(), kBlobMagic.begin(), kBlobMagic.end());
    out.push_back(blob.version);
    put_u16(out, std::uint16_t(policy_bytes.size()));
    out.insert(out.end(), policy_bytes.begin(), policy_bytes.end());
    out.insert(out.end(), blob.nonce.begin(), blob.nonce.end());
    put_u16(out, std::uint16_t(blob.shares.size()));
    for (const auto& s : blob.shares) {
        put_u16(out, s.leaf_index);
        put_u16(out, s.share_index);
        out.insert(out.end(), s.wrap_nonce.begin(), s.wrap_nonce.end());
        out.insert(out.end(), s.sealed.begin(), s.sealed.end());
    }
    put_u32(out, std::uint32_t(ct_len));
    return out;
}

std::array<std::uint8_t, 16> share_aad(const Nonce& blob_nonce, std::uint16_t leaf, std::uint16_t index)
{
    std::array<std::uint8_t, 16> aad{};
    std::copy(blob_nonce.begin(), blob_nonce.end(), aad.begin());
    aad[12] = std::uint8_t(leaf);
    aad[13] = std::uint8_t(leaf >> 8);
    aad[14] = std::uint8_t(index);
    aad[15] = std::uint8_t(index >> 8);
    return aad;
}

Key32 content_key(const Fe& secret)
{
    Bytes msg{'c', 'o', 'n', 't', 'e', 'n', 't', '-', 'k', 'e', 'y'};
    const Key32 s = detail::fe_to_bytes(secret);
    msg.insert(msg.end(), s.begin(), s.end());
    return detail::sha256(msg);
}

struct LeafShare {
    Fe value;
    std::uint16_t index;
};

void split(const PolicyNode& node, const Fe& value, std::uint16_t index, detail::Drbg& rng, std::vector<LeafShare>& out)
{
    if (node.is_leaf()) {
        out.push_back({value, index});
        return;
    }
    std::vector<Fe> coeffs{value};
    for (std::size_t i = 1; i < node.threshold; ++i) coeffs.push_back(detail::fe_random(rng));
    for (std::size_t i = 0; i < node.children.size(); ++i) {
        const auto x = static_cast<std::uint16_t>(i + 1);
        split(node.children[i], detail::poly_eval(coeffs, x), x, rng, out);
    }
}

std::size_t subtree_leaves(const PolicyNode& node)
{
    if (node.is_leaf()) return 1;
    std::size_t n = 0;
    for (const auto& c : node.children) n += subtree_leaves(c);
    return n;
}

// Mirrors satisfies(): returns the node's secret when enough shares open.
std::optional<Fe> recover(const PolicyNode& node, std::size_t& leaf_cursor, const PrivateKey& sk, const EncryptedBlob& blob)
{
    if (node.is_leaf()) {
        const std::size_t leaf = leaf_cursor++;
        const auto it = sk.attribute_keys.find(node.attribute);
        if (it == sk.attribute_keys.end()) return std::nullopt;
        const WrappedShare& ws = blob.shares[leaf];
        const auto aad = share_aad(blob.nonce, ws.leaf_index, ws.share_index);
        const auto opened = detail::aead_open(it->second, ws.wrap_nonce, aad, ws.sealed);
        if (!opened || opened->size() != 32) {
            throw Error(ErrorKind::CorruptCiphertext, "share for leaf " + std::to_string(leaf) + " failed authentication");
        }
        Key32 raw{};
        std::copy(opened->begin(), opened->end(), raw.begin());
        const Fe v = detail::fe_from_bytes(raw);
        if (v >= detail::field_prime()) throw Error(ErrorKind::CorruptCiphertext, "share out of field range");
        return v;
    }
    std::vector<std::uint64_t> xs;
    std::vector<Fe> ys;
    for (std::size_t i = 0; i < node.children.size(); ++i) {
        const auto& child = node.children[i];
        if (xs.size() == node.threshold) {
            leaf_cursor += subtree_leaves(child);
            continue;
        }
        if (auto v = recover(child, leaf_cursor, sk, blob)) {
            xs.push_back(i + 1);
            ys.push_back(*v);
        }
    }
    if (xs.size() < node.threshold) return std::nullopt;
    return detail::lagrange_at_zero(xs, ys);
}

void expected_indices(const PolicyNode& node, std::uint16_t index, std::vector<std::uint16_t>& out)
{
    if (node.is_leaf()) {
        out.push_back(index);
        return;
    }
    for (std::size_t i = 0; i < node.children.size(); ++i) expected_indices(node.children[i], std::uint16_t(i + 1), out);
}

}  // namespace

bool looks_like_blob(ByteView bytes)
{
    return bytes.size() >= kBlobFixedOverhead + kTagSize && std::equal(kBlobMagic.begin(), kBlobMagic.end(), bytes.begin()) &&
           bytes[4] == kBlobVersion;
}

std::size_t blob_plaintext_size(ByteView wire)
{
    if (!looks_like_blob(wire)) throw Error(ErrorKind::MalformedBlob, "missing blob magic");
    const std::size_t policy_len = get_u16(wire, 5);
    std::size_t at = 7 + policy_len + 12;
    if (wire.size() < at + 2) throw Error(ErrorKind::MalformedBlob, "header truncated");
    const std::size_t shares = get_u16(wire, at);
    at += 2 + shares * kShareWireSize;
    if (wire.size() < at + 4) throw Error(ErrorKind::MalformedBlob, "header truncated");
    const std::size_t ct_len = get_u32(wire, at);
    if (ct_len < kTagSize) throw Error(ErrorKind::MalformedBlob, "ciphertext shorter than tag");
    return ct_len - kTagSize;
}

std::size_t header_size(const AccessPolicy& policy)
{
    return kBlobFixedOverhead + policy.serialize().size() + kShareWireSize * policy.leaf_count();
}

std::size_t blob_overhead(const AccessPolicy& policy) { return header_size(policy) + kTagSize; }

Bytes EncryptedBlob::serialize() const
{
    Bytes out = header_bytes(*this, policy.serialize(), ciphertext.size());
    out.insert(out.end(), ciphertext.begin(), ciphertext.end());
    return out;
}

EncryptedBlob EncryptedBlob::parse(ByteView wire)
{
    if (wire.size() < 7 || !std::equal(kBlobMagic.begin(), kBlobMagic.end(), wire.begin())) {
        throw Error(ErrorKind::MalformedBlob, "missing blob magic");
    }
    if (wire[4] != kBlobVersion) throw Error(ErrorKind::MalformedBlob, "unsupported version " + std::to_string(wire[4]));
    const std::size_t policy_len = get_u16(wire, 5);
    std::size_t at = 7;
    if (wire.size() < at + policy_len + 12 + 2) throw Error(ErrorKind::MalformedBlob, "header truncated");
    EncryptedBlob blob{kBlobVersion, AccessPolicy::deserialize(wire.subspan(at, policy_len)), {}, {}, {}};
    at += policy_len;
    std::copy_n(wire.begin() + at, 12, blob.nonce.begin());
    at += 12;
    const std::size_t count = get_u16(wire, at);
    at += 2;
    std::vector<std::uint16_t> expected;
    expected_indices(blob.policy.root(), 0, expected);
    if (count != expected.size()) {
        throw Error(ErrorKind::MalformedBlob,
                    "share count " + std::to_string(count) + " for a policy with " + std::to_string(expected.size()) + " leaves");
    }
    if (wire.size() < at + count * kShareWireSize + 4) throw Error(ErrorKind::MalformedBlob, "share table truncated");
    blob.shares.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        WrappedShare& s = blob.shares[i];
        s.leaf_index = get_u16(wire, at);
        s.share_index = get_u16(wire, at + 2);
        if (s.leaf_index != i || s.share_index != expected[i]) throw Error(ErrorKind::MalformedBlob, "share table out of order");
        std::copy_n(wire.begin() + at + 4, 12, s.wrap_nonce.begin());
        std::copy_n(wire.begin() + at + 16, 48, s.sealed.begin());
        at += kShareWireSize;
    }
    const std::size_t ct_len = get_u32(wire, at);
    at += 4;
    if (ct_len < kTagSize) throw Error(ErrorKind::MalformedBlob, "ciphertext shorter than tag");
    if (wire.size() - at != ct_len) {
        throw Error(ErrorKind::MalformedBlob,
                    "ciphertext length " + std::to_string(ct_len) + " but " + std::to_string(wire.size() - at) + " bytes follow");
    }
    blob.ciphertext.assign(wire.begin() + at, wire.end());
    return blob;
}

EncryptedBlob encrypt(const PublicParams& pp, const AttributeAuthority& authority, const AccessPolicy& policy,
                      ByteView plaintext, ByteView rng_seed)
{
    if (plaintext.empty()) throw Error(ErrorKind::InvalidPolicy, "empty plaintext");
    if (plaintext.size() > 0xFFFFFFFFu - kTagSize) throw Error(ErrorKind::InvalidPolicy, "plaintext too large");
    if (pp.system_id != authority.system_id()) throw Error(ErrorKind::AuthorityMismatch, "public params and authority disagree");

    detail::Drbg rng(rng_seed);
    EncryptedBlob blob{kBlobVersion, policy, rng.take<12>(), {}, {}};
    const Fe secret = detail::fe_random(rng);

    std::vector<LeafShare> shares;
    split(policy.root(), secret, 0, rng, shares);
    const auto leaves = policy.leaves();
    blob.shares.resize(shares.size());
    for (std::size_t i = 0; i < shares.size(); ++i) {
        WrappedShare& ws = blob.shares[i];
        ws.leaf_index = std::uint16_t(i);
        ws.share_index = shares[i].index;
        ws.wrap_nonce = rng.take<12>();
        const auto aad = share_aad(blob.nonce, ws.leaf_index, ws.share_index);
        const Key32 value = detail::fe_to_bytes(shares[i].value);
        const Bytes sealed = detail::aead_seal(authority.attribute_key(leaves[i]->attribute), ws.wrap_nonce, aad, value);
        std::copy(sealed.begin(), sealed.end(), ws.sealed.begin());
    }

    const std::size_t ct_len = plaintext.size() + kTagSize;
    const Bytes aad = header_bytes(blob, policy.serialize(), ct_len);
    blob.ciphertext = detail::aead_seal(content_key(secret), blob.nonce, aad, plaintext);
    return blob;
}

Bytes decrypt(const PrivateKey& sk, const EncryptedBlob& blob)
{
    if (blob.shares.size() != blob.policy.leaf_count()) throw Error(ErrorKind::MalformedBlob, "share count mismatch");
    if (blob.ciphertext.size() < kTagSize) throw Error(ErrorKind::MalformedBlob, "ciphertext shorter than tag");
    std::size_t cursor = 0;
    const auto secret = recover(blob.policy.root(), cursor, sk, blob);
    if (!secret) throw Error(ErrorKind::PolicyUnsatisfied, "key for '" + sk.user_id + "' does not satisfy " + blob.policy.to_text());
    const Bytes aad = header_bytes(blob, blob.policy.serialize(), blob.ciphertext.size());
    auto plain = detail::aead_open(content_key(*secret), blob.nonce, aad, blob.ciphertext);
    if (!plain) throw Error(ErrorKind::CorruptCiphertext, "payload failed authentication");
    return std::move(*plain);
}

Bytes decrypt(const PrivateKey& sk, ByteView wire) { return decrypt(sk, EncryptedBlob::parse(wire)); }

}  // namespace tilecrypt::abekit
