#pragma once

// Directory of skill files, one `<name>.skill.json` per skill. The files are
// the only state; every call goes back to the filesystem.

#include "teleskill/skill_io.hpp"

#include <algorithm>
#include <filesystem>
#include <mutex>
#include <string>
#include <vector>

namespace teleskill {

class UnknownSkillError : public SkillError {
public:
    using SkillError::SkillError;
};

class SkillStore {
public:
    static constexpr const char* kExtension = ".skill.json";

    explicit SkillStore(std::filesystem::path dir) : dir_(std::move(dir)) {}

    const std::filesystem::path& directory() const { return dir_; }

    static bool valid_name(const std::string& name) {
        if (name.empty() || name.size() > 128 || name.front() == '.') {
            return false;
        }
        return std::all_of(name.begin(), name.end(), [](char c) {
            return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
        });
    }

    std::filesystem::path path_for(const std::string& name) const { return dir_ / (name + kExtension); }

    bool contains(const std::string& name) const {
        return valid_name(name) && std::filesystem::is_regular_file(path_for(name));
    }

    std::vector<std::string> list() const {
        std::vector<std::string> names;
        std::error_code ec;
        if (!std::filesystem::is_directory(dir_, ec)) {
            return names;
        }
        const std::string ext = kExtension;
        for (const auto& entry : std::filesystem::directory_iterator(dir_, ec)) {
            const std::string file = entry.path().filename().string();
            if (entry.is_regular_file() && file.size() > ext.size() &&
                file.compare(file.size() - ext.size(), ext.size(), ext) == 0) {
                names.push_back(file.substr(0, file.size() - ext.size()));
            }
        }
        std::sort(names.begin(), names.end());
        return names;
    }

    SkillRecording load(const std::string& name) const {
        if (!contains(name)) {
            throw UnknownSkillError("unknown skill '" + name + "'");
        }
        return load_skill(path_for(name).string());
    }

    /// Raw file contents, as served over HTTP.
    std::string read_raw(const std::string& name) const {
        if (!contains(name)) {
            throw UnknownSkillError("unknown skill '" + name + "'");
        }
        std::ifstream in(path_for(name), std::ios::binary);
        std::stringstream buf;
        buf << in.rdbuf();
        return buf.str();
    }

    /// Writes the skill under its name; an existing name gets a `_2`, `_3`, ...
    /// suffix. Returns the name actually used (also stored in the file).
    std::string save(SkillRecording skill) {
        if (!valid_name(skill.name)) {
            throw SkillError("invalid skill name '" + skill.name + "' (use letters, digits, '_', '-', '.')");
        }
        std::lock_guard<std::mutex> lock(write_mutex_);
        std::filesystem::create_directories(dir_);
        const std::string base = skill.name;
        for (int version = 2; std::filesystem::exists(path_for(skill.name)); ++version) {
            skill.name = base + "_" + std::to_string(version);
        }
        save_skill(skill, path_for(skill.name).string());
        return skill.name;
    }

private:
    std::filesystem::path dir_;
    std::mutex write_mutex_;
};

}  // namespace teleskill
