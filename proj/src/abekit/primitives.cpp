#include "primitives.hpp"

#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/sha.h>

#include <memory>

namespace tilecrypt::abekit::detail {

namespace {

struct CtxFree {
    void operator()(EVP_CIPHER_CTX* ctx) const { EVP_CIPHER_CTX_free(ctx); }
};
using CipherCtx = std::unique_ptr<EVP_CIPHER_CTX, CtxFree>;

[[noreturn]] void openssl_failure(const char* step)
{
    throw std::runtime_error(std::string("openssl: ") + step + " failed");
}

}  // namespace

Key32 sha256(ByteView data)
{
    Key32 out{};
    SHA256(data.data(), data.size(), out.data());
    return out;
}

Key32 hmac_sha256(ByteView key, ByteView message)
{
    Key32 out{};
    unsigned len = 0;
    if (!HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), message.data(), message.size(), out.data(), &len)) {
        openssl_failure("HMAC");
    }
    return out;
}

Key32 hmac_sha256(ByteView key, std::string_view label, ByteView message)
{
    Bytes buf(label.begin(), label.end());
    buf.push_back(0);
    buf.insert(buf.end(), message.begin(), message.end());
    return hmac_sha256(key, buf);
}

Bytes aead_seal(const Key32& key, const Nonce& nonce, ByteView aad, ByteView plaintext)
{
    CipherCtx ctx(EVP_CIPHER_CTX_new());
    if (!ctx) openssl_failure("EVP_CIPHER_CTX_new");
    if (EVP_EncryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, nullptr, nullptr) != 1) openssl_failure("EncryptInit");
    if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN, int(nonce.size()), nullptr) != 1) openssl_failure("SET_IVLEN");
    if (EVP_EncryptInit_ex(ctx.get(), nullptr, nullptr, key.data(), nonce.data()) != 1) openssl_failure("EncryptInit key");
    int len = 0;
    if (!aad.empty() && EVP_EncryptUpdate(ctx.get(), nullptr, &len, aad.data(), int(aad.size())) != 1) openssl_failure("aad");
    Bytes out(plaintext.size() + kTagSize);
    if (!plaintext.empty() &&
        EVP_EncryptUpdate(ctx.get(), out.data(), &len, plaintext.data(), int(plaintext.size())) != 1) {
        openssl_failure("EncryptUpdate");
    }
    int tail = 0;
    if (EVP_EncryptFinal_ex(ctx.get(), out.data() + plaintext.size(), &tail) != 1) openssl_failure("EncryptFinal");
    if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, int(kTagSize), out.data() + plaintext.size()) != 1) {
        openssl_failure("GET_TAG");
    }
    return out;
}

std::optional<Bytes> aead_open(const Key32& key, const Nonce& nonce, ByteView aad, ByteView sealed)
{
    if (sealed.size() < kTagSize) return std::nullopt;
    const std::size_t body = sealed.size() - kTagSize;
    CipherCtx ctx(EVP_CIPHER_CTX_new());
    if (!ctx) openssl_failure("EVP_CIPHER_CTX_new");
    if (EVP_DecryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, nullptr, nullptr) != 1) openssl_failure("DecryptInit");
    if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN, int(nonce.size()), nullptr) != 1) openssl_failure("SET_IVLEN");
    if (EVP_DecryptInit_ex(ctx.get(), nullptr, nullptr, key.data(), nonce.data()) != 1) openssl_failure("DecryptInit key");
    int len = 0;
    if (!aad.empty() && EVP_DecryptUpdate(ctx.get(), nullptr, &len, aad.data(), int(aad.size())) != 1) openssl_failure("aad");
    Bytes out(body);
    if (body > 0 && EVP_DecryptUpdate(ctx.get(), out.data(), &len, sealed.data(), int(body)) != 1) return std::nullopt;
    Bytes tag(sealed.begin() + body, sealed.end());
    if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, int(kTagSize), tag.data()) != 1) openssl_failure("SET_TAG");
    int tail = 0;
    if (EVP_DecryptFinal_ex(ctx.get(), out.data() + body, &tail) != 1) return std::nullopt;
    return out;
}

Drbg::Drbg(ByteView seed)
{
    static constexpr std::uint8_t label[] = {'t', 'c', '-', 'd', 'r', 'b', 'g'};
    key_ = hmac_sha256(ByteView(label, sizeof label), seed);
}

void Drbg::fill(std::uint8_t* out, std::size_t n)
{
    while (n > 0) {
        if (used_ == block_.size()) {
            std::array<std::uint8_t, 8> ctr{};
            for (int i = 0; i < 8; ++i) ctr[i] = std::uint8_t(counter_ >> (8 * i));
            ++counter_;
            block_ = hmac_sha256(key_, ctr);
            used_ = 0;
        }
        const std::size_t take = std::min(n, block_.size() - used_);
        std::copy_n(block_.begin() + used_, take, out);
        used_ += take;
        out += take;
        n -= take;
    }
}

const Fe& field_prime()
{
    static const Fe p = Fe(0) - 189;  // unsigned wraparound gives 2^256 - 189
    return p;
}

Fe fe_from_bytes(const Key32& bytes)
{
    Fe v = 0;
    for (auto b : bytes) v = (v << 8) | b;
    return v;
}

Key32 fe_to_bytes(const Fe& v)
{
    Key32 out{};
    Fe x = v;
    for (std::size_t i = out.size(); i-- > 0;) {
        out[i] = static_cast<std::uint8_t>(x & 0xFF);
        x >>= 8;
    }
    return out;
}

namespace {
using Wide = boost::multiprecision::uint512_t;
}

Fe fe_add(const Fe& a, const Fe& b)
{
    Wide s = Wide(a) + Wide(b);
    if (s >= Wide(field_prime())) s -= Wide(field_prime());
    return static_cast<Fe>(s);
}

Fe fe_sub(const Fe& a, const Fe& b)
{
    if (a >= b) return a - b;
    return static_cast<Fe>(Wide(field_prime()) - Wide(b) + Wide(a));
}

Fe fe_mul(const Fe& a, const Fe& b)
{
    return static_cast<Fe>((Wide(a) * Wide(b)) % Wide(field_prime()));
}

Fe fe_inv(const Fe& a)
{
    // Fermat: a^(p-2).
    Fe result = 1;
    Fe base = a;
    Fe e = field_prime() - 2;
    while (e != 0) {
        if ((e & 1) != 0) result = fe_mul(result, base);
        base = fe_mul(base, base);
        e >>= 1;
    }
    return result;
}

Fe fe_random(Drbg& rng)
{
    for (;;) {
        const Fe v = fe_from_bytes(rng.take<32>());
        if (v < field_prime()) return v;
    }
}

Fe poly_eval(const std::vector<Fe>& coeffs, std::uint64_t x)
{
    Fe acc = 0;
    const Fe fx = x;
    for (std::size_t i = coeffs.size(); i-- > 0;) acc = fe_add(fe_mul(acc, fx), coeffs[i]);
    return acc;
}

Fe lagrange_at_zero(const std::vector<std::uint64_t>& xs, const std::vector<Fe>& ys)
{
    Fe acc = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        Fe num = 1;
        Fe den = 1;
        for (std::size_t j = 0; j < xs.size(); ++j) {
            if (j == i) continue;
            num = fe_mul(num, Fe(xs[j]));
            den = fe_mul(den, fe_sub(Fe(xs[j]), Fe(xs[i])));
        }
        acc = fe_add(acc, fe_mul(ys[i], fe_mul(num, fe_inv(den))));
    }
    return acc;
}

}  // namespace tilecrypt::abekit::detail
