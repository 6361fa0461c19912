#include "primitives.hpp"

#include <algorithm>

namespace tilecrypt::abekit {

namespace {

constexpr std::uint8_t kKeyFileVersion = 1;

void put_magic(Bytes& out, const char (&magic)[5])
{
    out.insert(out.end(), magic, magic + 4);
    out.push_back(kKeyFileVersion);
}

class Reader {
public:
    Reader(ByteView bytes, const char* what) : bytes_(bytes), what_(what) {}

    void expect_magic(const char (&magic)[5])
    {
        const auto m = take(4);
        if (!std::equal(m.begin(), m.end(), magic)) fail("bad magic");
        if (u8() != kKeyFileVersion) fail("unsupported version");
    }
    ByteView take(std::size_t n)
    {
        if (bytes_.size() - pos_ < n) fail("truncated");
        const ByteView v = bytes_.subspan(pos_, n);
        pos_ += n;
        return v;
    }
    std::uint8_t u8() { return take(1)[0]; }
    std::uint16_t u16()
    {
        const auto v = take(2);
        return std::uint16_t(v[0] | (v[1] << 8));
    }
    std::uint32_t u32()
    {
        const auto v = take(4);
        return std::uint32_t(v[0]) | (std::uint32_t(v[1]) << 8) | (std::uint32_t(v[2]) << 16) | (std::uint32_t(v[3]) << 24);
    }
    template <std::size_t N>
    std::array<std::uint8_t, N> array()
    {
        std::array<std::uint8_t, N> out{};
        const auto v = take(N);
        std::copy(v.begin(), v.end(), out.begin());
        return out;
    }
    void finish()
    {
        if (pos_ != bytes_.size()) fail("trailing bytes");
    }
    [[noreturn]] void fail(const std::string& why) const { throw Error(ErrorKind::MalformedKeyFile, std::string(what_) + ": " + why); }

private:
    ByteView bytes_;
    const char* what_;
    std::size_t pos_ = 0;
};

void put_u16(Bytes& out, std::uint16_t v)
{
    out.push_back(std::uint8_t(v));
    out.push_back(std::uint8_t(v >> 8));
}

ByteView as_bytes(std::string_view s) { return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()}; }

}  // namespace

Key32 AttributeAuthority::attribute_key(std::string_view attribute) const
{
    Bytes msg(system_id_.begin(), system_id_.end());
    msg.insert(msg.end(), attribute.begin(), attribute.end());
    return detail::hmac_sha256(seed_, "attribute-key", msg);
}

PublicParams MasterKey::public_params() const
{
    PublicParams pp;
    Bytes msg{'s', 'y', 's', 't', 'e', 'm', '-', 'i', 'd'};
    msg.insert(msg.end(), master_secret.begin(), master_secret.end());
    const Key32 digest = detail::sha256(msg);
    std::copy_n(digest.begin(), pp.system_id.size(), pp.system_id.begin());
    return pp;
}

AttributeAuthority MasterKey::authority() const { return AttributeAuthority(attribute_seed, public_params().system_id); }

Bytes MasterKey::serialize() const
{
    Bytes out;
    put_magic(out, "TCMK");
    out.insert(out.end(), master_secret.begin(), master_secret.end());
    out.insert(out.end(), attribute_seed.begin(), attribute_seed.end());
    return out;
}

MasterKey MasterKey::deserialize(ByteView bytes)
{
    Reader r(bytes, "master key");
    r.expect_magic("TCMK");
    MasterKey mk;
    mk.master_secret = r.array<32>();
    mk.attribute_seed = r.array<32>();
    r.finish();
    return mk;
}

Bytes PublicParams::serialize() const
{
    Bytes out;
    put_magic(out, "TCPP");
    out.insert(out.end(), system_id.begin(), system_id.end());
    for (int i = 0; i < 4; ++i) out.push_back(std::uint8_t(version >> (8 * i)));
    return out;
}

PublicParams PublicParams::deserialize(ByteView bytes)
{
    Reader r(bytes, "public params");
    r.expect_magic("TCPP");
    PublicParams pp;
    pp.system_id = r.array<16>();
    pp.version = r.u32();
    r.finish();
    return pp;
}

AttributeSet PrivateKey::attributes() const
{
    AttributeSet out;
    for (const auto& [name, key] : attribute_keys) out.insert(name);
    return out;
}

Bytes PrivateKey::serialize() const
{
    if (user_id.size() > 0xFFFF) throw Error(ErrorKind::MalformedKeyFile, "user id too long");
    if (attribute_keys.size() > 0xFFFF) throw Error(ErrorKind::MalformedKeyFile, "too many attributes");
    Bytes out;
    put_magic(out, "TCSK");
    put_u16(out, std::uint16_t(user_id.size()));
    out.insert(out.end(), user_id.begin(), user_id.end());
    put_u16(out, std::uint16_t(attribute_keys.size()));
    for (const auto& [name, key] : attribute_keys) {
        if (name.empty() || name.size() > 255) throw Error(ErrorKind::MalformedKeyFile, "attribute name length out of range");
        out.push_back(std::uint8_t(name.size()));
        out.insert(out.end(), name.begin(), name.end());
        out.insert(out.end(), key.begin(), key.end());
    }
    return out;
}

PrivateKey PrivateKey::deserialize(ByteView bytes)
{
    Reader r(bytes, "private key");
    r.expect_magic("TCSK");
    PrivateKey sk;
    const auto uid = r.take(r.u16());
    sk.user_id.assign(uid.begin(), uid.end());
    const std::size_t count = r.u16();
    if (count == 0) r.fail("no attributes");
    for (std::size_t i = 0; i < count; ++i) {
        const auto name = r.take(r.u8());
        if (name.empty()) r.fail("empty attribute name");
        const Key32 key = r.array<32>();
        if (!sk.attribute_keys.emplace(std::string(name.begin(), name.end()), key).second) r.fail("duplicate attribute");
    }
    r.finish();
    return sk;
}

AuthorityKeys setup(const Key32& seed)
{
    AuthorityKeys out;
    out.master.master_secret = detail::hmac_sha256(seed, as_bytes("master-secret"));
    out.master.attribute_seed = detail::hmac_sha256(seed, as_bytes("attribute-seed"));
    out.params = out.master.public_params();
    return out;
}

Key32 seed_from_bytes(ByteView material) { return detail::hmac_sha256(as_bytes("tc-seed"), material); }

PrivateKey keygen(const MasterKey& mk, std::string user_id, const AttributeSet& attrs)
{
    if (attrs.empty()) throw Error(ErrorKind::EmptyAttributeSet, "keygen for '" + user_id + "'");
    const AttributeAuthority authority = mk.authority();
    PrivateKey sk;
    sk.user_id = std::move(user_id);
    for (const auto& a : attrs) {
        if (a.empty() || a.size() > 255) throw Error(ErrorKind::InvalidPolicy, "attribute name length out of range");
        sk.attribute_keys.emplace(a, authority.attribute_key(a));
    }
    return sk;
}

}  // namespace tilecrypt::abekit
