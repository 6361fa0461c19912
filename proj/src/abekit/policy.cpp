#include "tilecrypt/abekit.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

namespace tilecrypt::abekit {

std::string_view to_string(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::EmptyAttributeSet: return "EmptyAttributeSet";
    case ErrorKind::InvalidPolicy: return "InvalidPolicy";
    case ErrorKind::PolicyParseError: return "PolicyParseError";
    case ErrorKind::PolicyUnsatisfied: return "PolicyUnsatisfied";
    case ErrorKind::CorruptCiphertext: return "CorruptCiphertext";
    case ErrorKind::MalformedBlob: return "MalformedBlob";
    case ErrorKind::MalformedKeyFile: return "MalformedKeyFile";
    case ErrorKind::AuthorityMismatch: return "AuthorityMismatch";
    }
    return "?";
}

Error::Error(ErrorKind kind, const std::string& what) : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

PolicyNode PolicyNode::leaf(std::string attribute)
{
    PolicyNode n;
    n.kind = Kind::Leaf;
    n.attribute = std::move(attribute);
    return n;
}

PolicyNode PolicyNode::gate(std::size_t threshold, std::vector<PolicyNode> children)
{
    PolicyNode n;
    n.kind = Kind::Gate;
    n.threshold = threshold;
    n.children = std::move(children);
    return n;
}

PolicyNode PolicyNode::all_of(std::vector<PolicyNode> children)
{
    const std::size_t n = children.size();
    return gate(n, std::move(children));
}

PolicyNode PolicyNode::any_of(std::vector<PolicyNode> children) { return gate(1, std::move(children)); }

namespace {

void validate(const PolicyNode& node, std::size_t& leaves)
{
    if (node.is_leaf()) {
        if (node.attribute.empty()) throw Error(ErrorKind::InvalidPolicy, "empty attribute name");
        if (node.attribute.size() > 255) throw Error(ErrorKind::InvalidPolicy, "attribute name longer than 255 bytes");
        if (!node.children.empty()) throw Error(ErrorKind::InvalidPolicy, "leaf with children");
        ++leaves;
        return;
    }
    const std::size_t n = node.children.size();
    if (n == 0 || n > 255) throw Error(ErrorKind::InvalidPolicy, "gate needs 1..255 children, has " + std::to_string(n));
    if (node.threshold < 1 || node.threshold > n) {
        throw Error(ErrorKind::InvalidPolicy,
                    "threshold " + std::to_string(node.threshold) + " outside 1.." + std::to_string(n));
    }
    for (const auto& c : node.children) validate(c, leaves);
}

void collect(const PolicyNode& node, std::vector<const PolicyNode*>& out)
{
    if (node.is_leaf()) {
        out.push_back(&node);
        return;
    }
    for (const auto& c : node.children) collect(c, out);
}

std::size_t count_leaves(const PolicyNode& node)
{
    if (node.is_leaf()) return 1;
    std::size_t n = 0;
    for (const auto& c : node.children) n += count_leaves(c);
    return n;
}

std::size_t node_depth(const PolicyNode& node)
{
    std::size_t d = 0;
    for (const auto& c : node.children) d = std::max(d, node_depth(c));
    return d + 1;
}

void write_node(const PolicyNode& node, Bytes& out)
{
    if (node.is_leaf()) {
        out.push_back(0x01);
        out.push_back(std::uint8_t(node.attribute.size()));
        out.insert(out.end(), node.attribute.begin(), node.attribute.end());
        return;
    }
    out.push_back(0x02);
    out.push_back(std::uint8_t(node.threshold));
    out.push_back(std::uint8_t(node.children.size()));
    for (const auto& c : node.children) write_node(c, out);
}

PolicyNode read_node(ByteView bytes, std::size_t& pos, unsigned depth)
{
    auto need = [&](std::size_t n) {
        if (bytes.size() - pos < n) throw Error(ErrorKind::MalformedBlob, "policy encoding truncated");
    };
    if (depth > 64) throw Error(ErrorKind::MalformedBlob, "policy nesting too deep");
    need(1);
    const std::uint8_t tag = bytes[pos++];
    if (tag == 0x01) {
        need(1);
        const std::size_t len = bytes[pos++];
        need(len);
        std::string attr(bytes.begin() + pos, bytes.begin() + pos + len);
        pos += len;
        return PolicyNode::leaf(std::move(attr));
    }
    if (tag == 0x02) {
        need(2);
        const std::size_t k = bytes[pos++];
        const std::size_t n = bytes[pos++];
        std::vector<PolicyNode> children;
        children.reserve(n);
        for (std::size_t i = 0; i < n; ++i) children.push_back(read_node(bytes, pos, depth + 1));
        return PolicyNode::gate(k, std::move(children));
    }
    throw Error(ErrorKind::MalformedBlob, "unknown policy node tag " + std::to_string(tag));
}

void render(const PolicyNode& node, std::string& out)
{
    if (node.is_leaf()) {
        out += node.attribute;
        return;
    }
    const std::size_t n = node.children.size();
    if (node.threshold == n) out += "and(";
    else if (node.threshold == 1) out += "or(";
    else out += std::to_string(node.threshold) + "of(";
    for (std::size_t i = 0; i < n; ++i) {
        if (i) out += ',';
        render(node.children[i], out);
    }
    out += ')';
}

bool attr_char(char c)
{
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.' || c == ':' || c == '@';
}

class PolicyParser {
public:
    explicit PolicyParser(std::string_view text) : text_(text) {}

    PolicyNode parse()
    {
        PolicyNode root = expr(0);
        skip_ws();
        if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
        return root;
    }

private:
    [[noreturn]] void fail(const std::string& msg) const
    {
        throw Error(ErrorKind::PolicyParseError, msg + " at offset " + std::to_string(pos_));
    }

    void skip_ws()
    {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    PolicyNode expr(unsigned depth)
    {
        if (depth > 64) fail("nesting too deep");
        skip_ws();
        const std::size_t start = pos_;
        while (pos_ < text_.size() && attr_char(text_[pos_])) ++pos_;
        if (pos_ == start) fail(pos_ == text_.size() ? "unexpected end of policy" : "expected attribute or gate");
        const std::string_view word = text_.substr(start, pos_ - start);
        skip_ws();
        if (pos_ >= text_.size() || text_[pos_] != '(') return PolicyNode::leaf(std::string(word));

        ++pos_;
        std::vector<PolicyNode> children;
        for (;;) {
            children.push_back(expr(depth + 1));
            skip_ws();
            if (pos_ < text_.size() && text_[pos_] == ',') {
                ++pos_;
                continue;
            }
            if (pos_ < text_.size() && text_[pos_] == ')') {
                ++pos_;
                break;
            }
            fail("expected ',' or ')'");
        }

        const std::size_t n = children.size();
        if (word == "and") return PolicyNode::gate(n, std::move(children));
        if (word == "or") return PolicyNode::gate(1, std::move(children));
        if (word.size() > 2 && word.substr(word.size() - 2) == "of") {
            std::size_t k = 0;
            const auto digits = word.substr(0, word.size() - 2);
            auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), k);
            if (ec == std::errc() && ptr == digits.data() + digits.size()) return PolicyNode::gate(k, std::move(children));
        }
        pos_ = start;
        fail("unknown gate '" + std::string(word) + "'");
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

}  // namespace

AccessPolicy::AccessPolicy(PolicyNode root) : root_(std::move(root))
{
    std::size_t leaves = 0;
    validate(root_, leaves);
    if (leaves > 0xFFFF) throw Error(ErrorKind::InvalidPolicy, "too many leaves");
    if (serialize().size() > 0xFFFF) throw Error(ErrorKind::InvalidPolicy, "policy encoding exceeds 65535 bytes");
}

std::size_t AccessPolicy::leaf_count() const { return count_leaves(root_); }

std::vector<const PolicyNode*> AccessPolicy::leaves() const
{
    std::vector<const PolicyNode*> out;
    collect(root_, out);
    return out;
}

std::size_t AccessPolicy::depth() const { return node_depth(root_); }

Bytes AccessPolicy::serialize() const
{
    Bytes out;
    write_node(root_, out);
    return out;
}

AccessPolicy AccessPolicy::deserialize(ByteView bytes)
{
    std::size_t pos = 0;
    PolicyNode root = read_node(bytes, pos, 0);
    if (pos != bytes.size()) throw Error(ErrorKind::MalformedBlob, "trailing bytes after policy");
    try {
        return AccessPolicy(std::move(root));
    } catch (const Error& e) {
        throw Error(ErrorKind::MalformedBlob, e.what());
    }
}

std::string AccessPolicy::to_text() const
{
    std::string out;
    render(root_, out);
    return out;
}

AccessPolicy parse_policy(std::string_view text)
{
    PolicyNode root = PolicyParser(text).parse();
    try {
        return AccessPolicy(std::move(root));
    } catch (const Error& e) {
        throw Error(ErrorKind::PolicyParseError, e.what());
    }
}

bool satisfies(const PolicyNode& node, const AttributeSet& attrs)
{
    if (node.is_leaf()) return attrs.contains(node.attribute);
    std::size_t ok = 0;
    for (const auto& c : node.children) {
        if (satisfies(c, attrs) && ++ok >= node.threshold) return true;
    }
    return false;
}

}  // namespace tilecrypt::abekit
