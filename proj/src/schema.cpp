// SPDX-License-Identifier: Apache-2.0
#include "adamatch/schema.hpp"

#include <algorithm>
#include <cctype>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "adamatch/errors.hpp"

namespace adamatch {

using ordered_json = nlohmann::ordered_json;

const SchemaElement* Schema::find(const std::string& id) const {
    for (const auto& e : elements)
        if (e.id == id) return &e;
    return nullptr;
}

const SchemaElement& Schema::at(const std::string& id) const {
    const SchemaElement* e = find(id);
    if (!e) throw ValidationError("schema '" + this->id + "': unknown element id '" + id + "'");
    return *e;
}

int Schema::index_of(const std::string& id) const {
    for (size_t i = 0; i < elements.size(); ++i)
        if (elements[i].id == id) return static_cast<int>(i);
    return -1;
}

std::vector<std::string> Schema::roots() const {
    std::vector<std::string> out;
    for (const auto& e : elements)
        if (!e.parent) out.push_back(e.id);
    return out;
}

bool Schema::is_leaf(const std::string& id) const { return at(id).children.empty(); }

int Schema::depth(const std::string& id) const {
    int d = 1;
    const SchemaElement* e = &at(id);
    while (e->parent) {
        e = &at(*e->parent);
        ++d;
    }
    return d;
}

int Schema::max_depth() const {
    int best = 0;
    for (const auto& e : elements) best = std::max(best, depth(e.id));
    return best;
}

namespace {

bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }
bool is_up(char c) { return std::isupper(static_cast<unsigned char>(c)) != 0; }
bool is_low(char c) { return std::islower(static_cast<unsigned char>(c)) != 0; }
bool is_dig(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

std::string to_lower(const std::string& s) {
    std::string out = s;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

} // namespace

std::vector<std::string> tokenize(const std::string& name) {
    std::vector<std::string> tokens;
    std::string cur;
    auto flush = [&] {
        if (!cur.empty()) {
            tokens.push_back(to_lower(cur));
            cur.clear();
        }
    };
    const size_t n = name.size();
    for (size_t i = 0; i < n; ++i) {
        char c = name[i];
        if (!is_alnum(c)) {  // _ - . / space and any other punctuation
            flush();
            continue;
        }
        if (!cur.empty()) {
            char prev = name[i - 1];  // alnum, or cur would be empty
            bool boundary = false;
            if (is_up(c) && (is_low(prev) || is_dig(prev))) boundary = true;  // camelCase
            else if (is_dig(c) != is_dig(prev)) boundary = true;              // letter<->digit
            // last capital of a run starting a new word: "XMLParser" -> XML|Parser
            else if (is_up(c) && is_up(prev) && i + 1 < n && is_low(name[i + 1]))
                boundary = true;
            if (boundary) flush();
        }
        cur.push_back(c);
    }
    flush();
    return tokens;
}

TokenSet token_set(const std::string& name) {
    auto v = tokenize(name);
    return TokenSet(v.begin(), v.end());
}

std::vector<std::string> path_of(const Schema& s, const std::string& id) {
    std::vector<std::string> rev;
    const SchemaElement* e = &s.at(id);
    rev.push_back(e->id);
    while (e->parent) {
        e = &s.at(*e->parent);
        rev.push_back(e->id);
    }
    std::reverse(rev.begin(), rev.end());
    return rev;
}

namespace {

void collect_leaves(const Schema& s, const std::string& id, std::vector<std::string>& out) {
    const SchemaElement& e = s.at(id);
    if (e.children.empty()) {
        out.push_back(id);
        return;
    }
    for (const auto& c : e.children) collect_leaves(s, c, out);
}

} // namespace

std::vector<std::string> tree_neighbors(const Schema& s, const std::string& id,
                                        NeighborKind kind) {
    const SchemaElement& e = s.at(id);
    std::vector<std::string> out;
    switch (kind) {
    case NeighborKind::Children:
        return e.children;
    case NeighborKind::Leaves:
        collect_leaves(s, id, out);
        return out;
    case NeighborKind::Parent:
        if (e.parent) out.push_back(*e.parent);
        return out;
    case NeighborKind::Siblings: {
        std::vector<std::string> pool;
        if (e.parent)
            pool = s.at(*e.parent).children;
        else
            pool = s.roots();
        for (const auto& sib : pool)
            if (sib != id) out.push_back(sib);
        return out;
    }
    }
    return out;
}

std::optional<int> tree_distance(const Schema& s, const std::string& a,
                                 const std::string& b) {
    auto pa = path_of(s, a);
    auto pb = path_of(s, b);
    if (pa.front() != pb.front()) return std::nullopt;  // different trees
    size_t common = 0;
    while (common < pa.size() && common < pb.size() && pa[common] == pb[common]) ++common;
    return static_cast<int>((pa.size() - common) + (pb.size() - common));
}

// -- canonical JSON format ----------------------------------------------------

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write file: " + path);
    out << content;
}

void validate(Schema& s, const std::string& origin) {
    if (s.elements.empty())
        throw ValidationError(origin + ": schema '" + s.id + "' has no elements");
    std::map<std::string, int> index;
    for (size_t i = 0; i < s.elements.size(); ++i) {
        const auto& e = s.elements[i];
        if (e.id.empty()) throw ValidationError(origin + ": element with empty id");
        if (!index.emplace(e.id, static_cast<int>(i)).second)
            throw ValidationError(origin + ": duplicate element id '" + e.id + "'");
    }
    // derive children from parent links, in element order
    std::map<std::string, std::vector<std::string>> derived;
    for (const auto& e : s.elements) {
        if (!e.parent) continue;
        auto it = index.find(*e.parent);
        if (it == index.end())
            throw ValidationError(origin + ": element '" + e.id + "' references missing parent '" +
                                  *e.parent + "'");
        derived[*e.parent].push_back(e.id);
    }
    for (auto& e : s.elements) {
        auto& der = derived[e.id];
        if (e.children.empty()) {
            e.children = der;
        } else {
            // explicit list must agree as a set with the parent links
            auto a = e.children, b = der;
            std::sort(a.begin(), a.end());
            std::sort(b.begin(), b.end());
            if (a != b)
                throw ValidationError(origin + ": element '" + e.id +
                                      "': children list disagrees with parent links");
        }
    }
    // cycle check: walk parent chains
    for (const auto& e : s.elements) {
        std::set<std::string> seen;
        const SchemaElement* cur = &e;
        while (cur->parent) {
            if (!seen.insert(cur->id).second)
                throw ValidationError(origin + ": parent cycle involving '" + e.id + "'");
            cur = &s.elements[index.at(*cur->parent)];
        }
    }
}

} // namespace

Schema parse_schema(const std::string& json_text, const std::string& origin) {
    ordered_json j;
    try {
        j = ordered_json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(origin + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("id") || !j.contains("elements"))
        throw ParseError(origin + ": expected object with 'id' and 'elements'");
    Schema s;
    try {
        s.id = j.at("id").get<std::string>();
        for (const auto& je : j.at("elements")) {
            SchemaElement e;
            e.id = je.at("id").get<std::string>();
            e.name = je.value("name", std::string());
            if (je.contains("datatype") && !je.at("datatype").is_null())
                e.datatype = je.at("datatype").get<std::string>();
            if (je.contains("annotation") && !je.at("annotation").is_null())
                e.annotation = je.at("annotation").get<std::string>();
            if (je.contains("instances"))
                for (const auto& inst : je.at("instances"))
                    e.instances.push_back(inst.get<std::string>());
            if (je.contains("parent") && !je.at("parent").is_null())
                e.parent = je.at("parent").get<std::string>();
            if (je.contains("children"))
                for (const auto& c : je.at("children")) e.children.push_back(c.get<std::string>());
            s.elements.push_back(std::move(e));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(origin + ": " + e.what());
    }
    validate(s, origin);
    return s;
}

Schema load_schema(const std::string& path) { return parse_schema(read_file(path), path); }

std::string serialize_schema(const Schema& s) {
    ordered_json j;
    j["id"] = s.id;
    j["elements"] = ordered_json::array();
    for (const auto& e : s.elements) {
        ordered_json je;
        je["id"] = e.id;
        je["name"] = e.name;
        je["datatype"] = e.datatype ? ordered_json(*e.datatype) : ordered_json(nullptr);
        je["annotation"] = e.annotation ? ordered_json(*e.annotation) : ordered_json(nullptr);
        je["instances"] = e.instances;
        je["parent"] = e.parent ? ordered_json(*e.parent) : ordered_json(nullptr);
        je["children"] = e.children;
        j["elements"].push_back(std::move(je));
    }
    return j.dump(2) + "\n";
}

void save_schema(const Schema& s, const std::string& path) {
    write_file(path, serialize_schema(s));
}

// -- XML import ---------------------------------------------------------------

namespace {

/// Minimal XML reader: elements, attributes (skipped), text, comments,
/// processing instructions, CDATA and the five predefined entities. Enough
/// for schema trees; anything fancier is rejected with a located error.
class XmlReader {
public:
    explicit XmlReader(const std::string& text) : text_(text) {}

    struct Node {
        std::string name;
        std::string text;
        std::vector<int> children;
        int parent = -1;
    };

    std::vector<Node> parse() {
        skip_misc();
        if (eof()) fail("document contains no root element");
        while (!eof()) {
            parse_element(-1);
            skip_misc();
        }
        if (roots_ == 0) fail("document contains no root element");
        return std::move(nodes_);
    }

private:
    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError("xml: " + msg + " at line " + std::to_string(line_) + ", column " +
                         std::to_string(col_));
    }

    bool eof() const { return pos_ >= text_.size(); }
    char peek() const { return text_[pos_]; }

    char advance() {
        char c = text_[pos_++];
        if (c == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        return c;
    }

    bool starts_with(const char* s) const { return text_.compare(pos_, strlen(s), s) == 0; }

    void expect(char c) {
        if (eof() || peek() != c) fail(std::string("expected '") + c + "'");
        advance();
    }

    void skip_ws() {
        while (!eof() && std::isspace(static_cast<unsigned char>(peek()))) advance();
    }

    void skip_until(const char* end) {
        size_t found = text_.find(end, pos_);
        if (found == std::string::npos) fail(std::string("unterminated section, missing '") + end + "'");
        while (pos_ < found + strlen(end)) advance();
    }

    void skip_misc() {  // whitespace, comments, declarations between elements
        for (;;) {
            skip_ws();
            if (starts_with("<?")) { skip_until("?>"); continue; }
            if (starts_with("<!--")) { skip_until("-->"); continue; }
            if (starts_with("<!")) { skip_until(">"); continue; }
            break;
        }
    }

    std::string parse_name() {
        std::string name;
        while (!eof()) {
            char c = peek();
            if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.' ||
                c == ':') {
                name.push_back(advance());
            } else {
                break;
            }
        }
        if (name.empty()) fail("expected element name");
        // strip a namespace prefix
        size_t colon = name.rfind(':');
        if (colon != std::string::npos) name = name.substr(colon + 1);
        return name;
    }

    void skip_attributes() {
        for (;;) {
            skip_ws();
            if (eof()) fail("unterminated start tag");
            char c = peek();
            if (c == '>' || c == '/' ) return;
            // attribute name
            while (!eof() && peek() != '=' && peek() != '>' && peek() != '/' &&
                   !std::isspace(static_cast<unsigned char>(peek())))
                advance();
            skip_ws();
            if (!eof() && peek() == '=') {
                advance();
                skip_ws();
                if (eof() || (peek() != '"' && peek() != '\'')) fail("expected quoted attribute value");
                char quote = advance();
                while (!eof() && peek() != quote) advance();
                if (eof()) fail("unterminated attribute value");
                advance();
            }
        }
    }

    std::string decode_entity() {
        // '&' already consumed
        std::string ent;
        while (!eof() && peek() != ';') ent.push_back(advance());
        if (eof()) fail("unterminated entity reference");
        advance();  // ';'
        if (ent == "amp") return "&";
        if (ent == "lt") return "<";
        if (ent == "gt") return ">";
        if (ent == "quot") return "\"";
        if (ent == "apos") return "'";
        fail("unknown entity '&" + ent + ";'");
    }

    void parse_element(int parent) {
        expect('<');
        std::string name = parse_name();
        skip_attributes();
        int idx = static_cast<int>(nodes_.size());
        nodes_.push_back(Node{name, "", {}, parent});
        if (parent < 0)
            ++roots_;
        else
            nodes_[parent].children.push_back(idx);
        if (peek() == '/') {
            advance();
            expect('>');
            return;  // self-closing
        }
        expect('>');
        std::string text;
        for (;;) {
            if (eof()) fail("unterminated element '" + name + "'");
            if (starts_with("<!--")) { skip_until("-->"); continue; }
            if (starts_with("<![CDATA[")) {
                size_t end = text_.find("]]>", pos_);
                if (end == std::string::npos) fail("unterminated CDATA section");
                while (pos_ < end) text.push_back(advance());
                skip_until("]]>");
                continue;
            }
            if (starts_with("<?")) { skip_until("?>"); continue; }
            if (starts_with("</")) {
                advance();
                advance();
                std::string closing = parse_name();
                if (closing != name)
                    fail("mismatched closing tag '" + closing + "', expected '" + name + "'");
                skip_ws();
                expect('>');
                break;
            }
            if (peek() == '<') {
                parse_element(idx);
                continue;
            }
            if (peek() == '&') {
                advance();
                text += decode_entity();
                continue;
            }
            text.push_back(advance());
        }
        // collapse whitespace runs, trim
        std::string cleaned;
        bool in_ws = true;
        for (char c : text) {
            if (std::isspace(static_cast<unsigned char>(c))) {
                if (!in_ws) cleaned.push_back(' ');
                in_ws = true;
            } else {
                cleaned.push_back(c);
                in_ws = false;
            }
        }
        while (!cleaned.empty() && cleaned.back() == ' ') cleaned.pop_back();
        nodes_[idx].text = cleaned;
    }

    const std::string& text_;
    size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
    std::vector<Node> nodes_;
    int roots_ = 0;
};

} // namespace

Schema import_xml_tree(const std::string& xml_text, const std::string& schema_id) {
    XmlReader reader(xml_text);
    auto nodes = reader.parse();
    Schema s;
    s.id = schema_id;
    for (size_t i = 0; i < nodes.size(); ++i) {
        SchemaElement e;
        e.id = "n" + std::to_string(i + 1);  // document order, stable
        e.name = nodes[i].name;
        if (!nodes[i].text.empty()) e.annotation = nodes[i].text;
        if (nodes[i].parent >= 0) e.parent = "n" + std::to_string(nodes[i].parent + 1);
        for (int c : nodes[i].children) e.children.push_back("n" + std::to_string(c + 1));
        s.elements.push_back(std::move(e));
    }
    validate(s, schema_id);
    return s;
}

Schema load_xml_tree(const std::string& path) {
    std::string text = read_file(path);
    std::string id = path;
    size_t slash = id.find_last_of("/\\");
    if (slash != std::string::npos) id = id.substr(slash + 1);
    size_t dot = id.rfind('.');
    if (dot != std::string::npos && dot > 0) id = id.substr(0, dot);
    return import_xml_tree(text, id);
}

} // namespace adamatch
