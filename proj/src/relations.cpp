#include "forge/relations.hpp"

#include <algorithm>
#include <cmath>
#include <regex>

#include "forge/codec.hpp"
#include "forge/depth_fusion.hpp"
#include "forge/rng.hpp"

namespace forge {

std::string_view to_string(Predicate p) noexcept {
    switch (p) {
        case Predicate::left_of: return "left_of";
        case Predicate::right_of: return "right_of";
        case Predicate::above: return "above";
        case Predicate::below: return "below";
        case Predicate::in_front_of: return "in_front_of";
        case Predicate::behind: return "behind";
        case Predicate::near: return "near";
    }
    return "near";
}

Predicate parse_predicate(std::string_view text) {
    for (Predicate p : {Predicate::left_of, Predicate::right_of, Predicate::above, Predicate::below,
                        Predicate::in_front_of, Predicate::behind, Predicate::near}) {
        if (to_string(p) == text) return p;
    }
    fail(ErrorCode::SchemaViolation, "unknown predicate '" + std::string(text) + "'");
}

Predicate inverse(Predicate p) noexcept {
    switch (p) {
        case Predicate::left_of: return Predicate::right_of;
        case Predicate::right_of: return Predicate::left_of;
        case Predicate::above: return Predicate::below;
        case Predicate::below: return Predicate::above;
        case Predicate::in_front_of: return Predicate::behind;
        case Predicate::behind: return Predicate::in_front_of;
        case Predicate::near: return Predicate::near;
    }
    return Predicate::near;
}

Predicate classify(const Location25D& subject, const Location25D& anchor, const RelationThresholds& t) {
    const double dd = subject.depth - anchor.depth;
    if (std::abs(dd) >= t.depth) return dd > 0 ? Predicate::in_front_of : Predicate::behind;
    const double dx = subject.bbox.center_x() - anchor.bbox.center_x();
    const double dy = subject.bbox.center_y() - anchor.bbox.center_y();
    if (std::abs(dy) >= std::abs(dx) && std::abs(dy) >= t.xy) return dy < 0 ? Predicate::above : Predicate::below;
    if (std::abs(dx) >= t.xy) return dx < 0 ? Predicate::left_of : Predicate::right_of;
    return Predicate::near;
}

std::vector<Relation> derive_relations(const Location25D& target, int target_id, const std::vector<Instance>& anchors,
                                       const DepthMap& depth, const RelationThresholds& t) {
    std::vector<Relation> out;
    out.reserve(anchors.size());
    for (const Instance& a : anchors) {
        if (a.id == target_id) fail(ErrorCode::InvalidArgument, "anchor and target must differ");
        const Location25D anchor{a.bbox, anchor_depth(depth, a.bbox)};
        out.push_back(Relation{target_id, classify(target, anchor, t), a.id});
    }
    return out;
}

std::vector<Relation> derive_relations(const Instance& target, const std::vector<Instance>& anchors,
                                       const DepthMap& depth, const RelationThresholds& t) {
    return derive_relations(Location25D{target.bbox, anchor_depth(depth, target.bbox)}, target.id, anchors, depth, t);
}

namespace {

struct Phrasing {
    Predicate predicate;
    std::vector<std::string_view> phrases;  // [0] is canonical
};

const std::vector<Phrasing>& phrasings() {
    static const std::vector<Phrasing> table = {
        {Predicate::left_of, {"to the left of", "on the left side of"}},
        {Predicate::right_of, {"to the right of", "on the right side of"}},
        {Predicate::above, {"above"}},
        {Predicate::below, {"below", "underneath"}},
        {Predicate::in_front_of, {"in front of"}},
        {Predicate::behind, {"behind"}},
        {Predicate::near, {"near", "next to"}},
    };
    return table;
}

const Phrasing& phrasing_for(Predicate p) {
    for (const auto& ph : phrasings()) {
        if (ph.predicate == p) return ph;
    }
    return phrasings().back();
}

constexpr std::string_view kVerbs[] = {"Place", "Put", "Position", "Set"};

}  // namespace

std::string render_instruction(const std::string& target_name, const std::vector<Relation>& relations,
                               const std::map<int, std::string>& anchor_names, std::uint64_t seed,
                               TemplateSet templates) {
    if (relations.empty()) fail(ErrorCode::InvalidArgument, "instruction needs at least one relation");
    Rng rng(seed);
    const bool varied = templates == TemplateSet::varied;
    std::string text(varied ? kVerbs[rng.below(std::size(kVerbs))] : kVerbs[0]);
    text += " the " + target_name;
    for (std::size_t i = 0; i < relations.size(); ++i) {
        const auto name = anchor_names.find(relations[i].anchor);
        if (name == anchor_names.end()) {
            fail(ErrorCode::InvalidArgument, "no name for anchor " + std::to_string(relations[i].anchor));
        }
        const auto& options = phrasing_for(relations[i].predicate).phrases;
        const std::string_view phrase = varied ? options[rng.below(options.size())] : options[0];
        if (i > 0) text += (relations.size() == 2) ? " and" : (i + 1 == relations.size() ? ", and" : ",");
        text += " ";
        text += phrase;
        text += " the " + name->second;
    }
    text += ".";
    return text;
}

ParsedInstruction parse_instruction(std::string_view text) {
    // Longer phrases first so "to the left of" wins over any shorter overlap.
    static const std::regex clause(
        R"((to the left of|on the left side of|to the right of|on the right side of|in front of|underneath|next to|above|below|behind|near)\s+the\s+([^,.]+?)(?=\s*(,|\band\b|\.|$)))",
        std::regex::icase);
    static const std::regex subject(R"(^\s*(?:\w+\s+)?(?:the\s+)?(.*?)\s*$)", std::regex::icase);

    const std::string s(text);
    ParsedInstruction out;
    std::size_t first = std::string::npos;
    for (auto it = std::sregex_iterator(s.begin(), s.end(), clause); it != std::sregex_iterator(); ++it) {
        const std::smatch& m = *it;
        if (first == std::string::npos) first = static_cast<std::size_t>(m.position(0));
        std::string phrase = m[1].str();
        std::transform(phrase.begin(), phrase.end(), phrase.begin(), [](unsigned char c) { return std::tolower(c); });
        Predicate p = Predicate::near;
        for (const auto& ph : phrasings()) {
            if (std::find(ph.phrases.begin(), ph.phrases.end(), phrase) != ph.phrases.end()) p = ph.predicate;
        }
        out.clauses.push_back(ParsedClause{p, m[2].str()});
    }
    if (out.clauses.empty()) fail(ErrorCode::UnparsableInstruction, "no spatial relation found in '" + s + "'");

    std::smatch m;
    const std::string head = s.substr(0, first);
    if (std::regex_match(head, m, subject)) out.target_name = m[1].str();
    if (out.target_name == "it" || out.target_name == "It") out.target_name.clear();
    return out;
}

void to_json(nlohmann::json& j, const Relation& r) {
    j = nlohmann::json{{"subject", r.subject}, {"predicate", to_string(r.predicate)}, {"anchor", r.anchor}};
}

void from_json(const nlohmann::json& j, Relation& r) {
    r.subject = j.at("subject").get<int>();
    r.predicate = parse_predicate(j.at("predicate").get<std::string>());
    r.anchor = j.at("anchor").get<int>();
    if (r.subject == r.anchor) fail(ErrorCode::SchemaViolation, "relation subject equals anchor");
}

const Instance* SceneAnnotation::find_by_name(std::string_view name) const {
    auto lower = [](std::string_view s) {
        std::string out(s);
        std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
        return out;
    };
    const std::string key = lower(name);
    for (const Instance& inst : instances) {
        if (lower(inst.name) == key) return &inst;
    }
    return nullptr;
}

const Instance* SceneAnnotation::find_by_id(int id) const {
    for (const Instance& inst : instances) {
        if (inst.id == id) return &inst;
    }
    return nullptr;
}

void to_json(nlohmann::json& j, const Instance& inst) {
    j = nlohmann::json{{"id", inst.id}, {"name", inst.name}, {"bbox", inst.bbox}};
    if (!inst.seg_ref.empty()) j["seg"] = inst.seg_ref;
}

void from_json(const nlohmann::json& j, Instance& inst) {
    inst.id = j.at("id").get<int>();
    inst.name = j.at("name").get<std::string>();
    inst.bbox = j.at("bbox").get<BBox>();
    inst.seg_ref = j.value("seg", std::string());
}

void to_json(nlohmann::json& j, const SceneAnnotation& scene) {
    j = nlohmann::json{{"image", scene.image_ref}, {"instances", scene.instances}, {"depth", scene.depth_ref}};
}

void from_json(const nlohmann::json& j, SceneAnnotation& scene) {
    scene.image_ref = j.value("image", std::string());
    scene.depth_ref = j.value("depth", std::string());
    scene.instances = j.at("instances").get<std::vector<Instance>>();
}

}  // namespace forge
