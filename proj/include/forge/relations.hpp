#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "forge/raster.hpp"

namespace forge {

enum class Predicate { left_of, right_of, above, below, in_front_of, behind, near };

std::string_view to_string(Predicate p) noexcept;
Predicate parse_predicate(std::string_view text);
/// left_of <-> right_of, above <-> below, in_front_of <-> behind, near -> near.
Predicate inverse(Predicate p) noexcept;

struct Relation {
    int subject = 0;
    Predicate predicate = Predicate::near;
    int anchor = 0;

    friend bool operator==(const Relation&, const Relation&) = default;
};

struct Instance {
    int id = 0;
    std::string name;
    BBox bbox;
    std::string seg_ref;  // mask PNG path, may be empty for in-memory scenes

    friend bool operator==(const Instance&, const Instance&) = default;
};

struct SceneAnnotation {
    std::string image_ref;
    std::vector<Instance> instances;
    std::string depth_ref;

    /// First instance whose name matches case-insensitively.
    const Instance* find_by_name(std::string_view name) const;
    const Instance* find_by_id(int id) const;
};

struct RelationThresholds {
    double depth = 0.15;  // |d_t - d_a| at or above this is a depth relation
    double xy = 0.05;     // minimum center offset for a positional relation
};

/// Predicate for a subject with center (cx, cy) and depth relative to an anchor.
/// Priority: depth, then the dominant vertical offset, then horizontal, else near.
Predicate classify(const Location25D& subject, const Location25D& anchor, const RelationThresholds& t = {});

/// Depth of each box is read with anchor_depth() from `depth`.
std::vector<Relation> derive_relations(const Instance& target, const std::vector<Instance>& anchors,
                                       const DepthMap& depth, const RelationThresholds& t = {});

/// As above, but the target's depth is given explicitly (used to re-check predicted locations).
std::vector<Relation> derive_relations(const Location25D& target, int target_id, const std::vector<Instance>& anchors,
                                       const DepthMap& depth, const RelationThresholds& t = {});

enum class TemplateSet {
    canonical,  // always "Place the {target} {rel} the {anchor}..."
    varied,     // seeded choice of verb and phrasing
};

std::string render_instruction(const std::string& target_name, const std::vector<Relation>& relations,
                               const std::map<int, std::string>& anchor_names, std::uint64_t seed,
                               TemplateSet templates = TemplateSet::varied);

/// One clause of an instruction: a predicate and the anchor's name as written.
struct ParsedClause {
    Predicate predicate;
    std::string anchor_name;
};

struct ParsedInstruction {
    std::string target_name;  // empty when the instruction says "it"
    std::vector<ParsedClause> clauses;
};

/// Parses instructions produced by render_instruction (and simple free text of
/// the same shape). Throws UnparsableInstruction when no clause is found.
ParsedInstruction parse_instruction(std::string_view text);

void to_json(nlohmann::json& j, const Relation& r);
void from_json(const nlohmann::json& j, Relation& r);
void to_json(nlohmann::json& j, const Instance& inst);
void from_json(const nlohmann::json& j, Instance& inst);
void to_json(nlohmann::json& j, const SceneAnnotation& scene);
void from_json(const nlohmann::json& j, SceneAnnotation& scene);

}  // namespace forge
