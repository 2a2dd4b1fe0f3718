#include "mudscope/public_suffix.hpp"

#include "mudscope/net.hpp"

#include <algorithm>
#include <sstream>

namespace mudscope {

namespace {

// Curated subset: generic TLDs, common country second levels and hosting suffixes.
constexpr std::string_view kSnapshot = R"(
com
net
org
edu
gov
mil
int
info
biz
io
co
me
tv
cc
ai
app
dev
cloud
online
site
tech
xyz
us
uk
co.uk
ac.uk
gov.uk
org.uk
ltd.uk
plc.uk
net.uk
au
com.au
net.au
org.au
edu.au
gov.au
asn.au
id.au
cn
com.cn
net.cn
org.cn
edu.cn
gov.cn
ac.cn
jp
co.jp
ne.jp
or.jp
ac.jp
go.jp
kr
co.kr
or.kr
in
co.in
net.in
org.in
br
com.br
net.br
de
fr
nl
eu
ca
it
es
se
ch
ru
tw
com.tw
hk
com.hk
sg
com.sg
nz
co.nz
za
co.za
mx
com.mx
*.ck
!www.ck
*.kawasaki.jp
!city.kawasaki.jp
amazonaws.com
*.compute.amazonaws.com
*.compute-1.amazonaws.com
s3.amazonaws.com
elasticbeanstalk.com
cloudfront.net
azurewebsites.net
cloudapp.net
appspot.com
herokuapp.com
github.io
blogspot.com
firebaseapp.com
)";

std::vector<std::string> labels(std::string_view name) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : name) {
        if (c == '.') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

std::string join(const std::vector<std::string>& l, std::size_t from) {
    std::string s;
    for (std::size_t i = from; i < l.size(); ++i) {
        if (!s.empty()) s.push_back('.');
        s += l[i];
    }
    return s;
}

} // namespace

const PublicSuffixList& PublicSuffixList::builtin() {
    static const PublicSuffixList list = parse(kSnapshot);
    return list;
}

PublicSuffixList PublicSuffixList::parse(std::string_view text) {
    PublicSuffixList psl;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        auto e = line.find_first_of(" \t\r", b);
        std::string rule = to_lower(line.substr(b, e == std::string::npos ? std::string::npos : e - b));
        if (rule.starts_with("//")) continue;
        psl.rules_.push_back(std::move(rule));
    }
    std::sort(psl.rules_.begin(), psl.rules_.end());
    psl.rules_.erase(std::unique(psl.rules_.begin(), psl.rules_.end()), psl.rules_.end());
    return psl;
}

std::string PublicSuffixList::public_suffix(std::string_view raw) const {
    std::string name = to_lower(raw);
    while (!name.empty() && name.back() == '.') name.pop_back();
    const auto l = labels(name);
    auto has = [&](const std::string& r) { return std::binary_search(rules_.begin(), rules_.end(), r); };

    // Exception rules win outright: the suffix is the rule minus its leftmost label.
    for (std::size_t i = 0; i < l.size(); ++i)
        if (has("!" + join(l, i))) return join(l, i + 1);

    std::size_t best = l.size() - 1; // implicit "*"
    for (std::size_t i = 0; i < l.size(); ++i) {
        std::string tail = join(l, i);
        bool match = has(tail);
        if (!match && i + 1 < l.size()) match = has("*." + join(l, i + 1));
        if (match) {
            best = i;
            break;
        }
    }
    return join(l, best);
}

std::optional<std::string> PublicSuffixList::registrable_domain(std::string_view raw) const {
    std::string name = to_lower(raw);
    while (!name.empty() && name.back() == '.') name.pop_back();
    if (name.empty()) return std::nullopt;
    std::string suffix = public_suffix(name);
    if (suffix.size() >= name.size()) return std::nullopt;
    std::string head = name.substr(0, name.size() - suffix.size() - 1);
    auto dot = head.rfind('.');
    return (dot == std::string::npos ? head : head.substr(dot + 1)) + "." + suffix;
}

std::string compact_domain(std::string_view name) {
    if (auto r = PublicSuffixList::builtin().registrable_domain(name)) return *r;
    return std::string(name);
}

} // namespace mudscope
