#include "mattekit/io/run_log.hpp"

#include <stdexcept>

namespace mattekit::io {

RunLog::RunLog(const std::filesystem::path& path) : out_(path, std::ios::app) {
  if (!out_) throw std::runtime_error("cannot open run log " + path.string());
}

void RunLog::event(const std::string& name, nlohmann::json fields) {
  if (!out_.is_open()) return;
  fields["event"] = name;
  out_ << fields.dump() << '\n';
  out_.flush();
}

void RunLog::warning(const std::string& message) {
  event("warning", {{"message", message}});
}

}  // namespace mattekit::io
