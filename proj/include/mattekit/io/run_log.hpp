#pragma once

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <string>

namespace mattekit::io {

/// Line-delimited JSON event log. Every line is one object with an "event"
/// field. A default-constructed log discards events.
class RunLog {
 public:
  RunLog() = default;
  explicit RunLog(const std::filesystem::path& path);

  void event(const std::string& name, nlohmann::json fields = nlohmann::json::object());
  void warning(const std::string& message);

 private:
  std::ofstream out_;
};

}  // namespace mattekit::io
