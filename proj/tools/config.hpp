#pragma once

#include <optional>
#include <stdexcept>
#include <string>

#include "json.hpp"

namespace qmem::cli
{

using nlohmann::json;

// Schema violation, reported with the JSON pointer of the offending node.
class ConfigError : public std::runtime_error
{
public:
    ConfigError(const std::string &pointer, const std::string &what) : std::runtime_error(pointer + ": " + what) {}
};

// Read-only view of one object node with its pointer.
class Node
{
public:
    Node(const json &j, std::string pointer) : j_(&j), pointer_(std::move(pointer)) {}

    const std::string &pointer() const { return pointer_; }
    bool has(const std::string &key) const { return j_->contains(key); }

    double number(const std::string &key) const;
    std::optional<double> opt_number(const std::string &key) const;
    double number_or(const std::string &key, double fallback) const { return opt_number(key).value_or(fallback); }
    int integer(const std::string &key) const;
    std::optional<int> opt_integer(const std::string &key) const;
    std::string string(const std::string &key) const;

    Node child(const std::string &key) const;
    std::optional<Node> opt_child(const std::string &key) const;
    const json &raw(const std::string &key) const;

private:
    const json *j_;
    std::string pointer_;
};

// Parsed project configuration. Unknown keys anywhere are rejected on load.
class Config
{
public:
    static Config load(const std::string &path);
    static Config parse(const std::string &text);
    static Config empty();

    Node root() const { return Node(doc_, ""); }
    std::optional<Node> section(const std::string &name) const;
    Node require_section(const std::string &name) const;

private:
    explicit Config(json doc);
    json doc_;
};

} // namespace qmem::cli
