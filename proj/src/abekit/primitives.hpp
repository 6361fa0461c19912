#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <optional>
#include <string_view>

#include "tilecrypt/abekit.hpp"

namespace tilecrypt::abekit::detail {

Key32 sha256(ByteView data);
Key32 hmac_sha256(ByteView key, ByteView message);
Key32 hmac_sha256(ByteView key, std::string_view label, ByteView message = {});

// AES-256-GCM; sealed output is ciphertext followed by the 16-byte tag.
Bytes aead_seal(const Key32& key, const Nonce& nonce, ByteView aad, ByteView plaintext);
std::optional<Bytes> aead_open(const Key32& key, const Nonce& nonce, ByteView aad, ByteView sealed);

// HMAC-SHA256 in counter mode.
class Drbg {
public:
    explicit Drbg(ByteView seed);
    void fill(std::uint8_t* out, std::size_t n);
    template <std::size_t N>
    std::array<std::uint8_t, N> take()
    {
        std::array<std::uint8_t, N> out{};
        fill(out.data(), N);
        return out;
    }

private:
    Key32 key_;
    std::uint64_t counter_ = 0;
    Key32 block_{};
    std::size_t used_ = 32;
};

// Arithmetic modulo p = 2^256 - 189.
using Fe = boost::multiprecision::uint256_t;

const Fe& field_prime();
Fe fe_from_bytes(const Key32& bytes);  // big-endian, must be < p
Key32 fe_to_bytes(const Fe& v);
Fe fe_add(const Fe& a, const Fe& b);
Fe fe_sub(const Fe& a, const Fe& b);
Fe fe_mul(const Fe& a, const Fe& b);
Fe fe_inv(const Fe& a);
Fe fe_random(Drbg& rng);

// Evaluates sum(coeffs[i] * x^i).
Fe poly_eval(const std::vector<Fe>& coeffs, std::uint64_t x);
// Interpolates the polynomial through (xs[i], ys[i]) at x = 0.
Fe lagrange_at_zero(const std::vector<std::uint64_t>& xs, const std::vector<Fe>& ys);

}  // namespace tilecrypt::abekit::detail
