#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <string_view>

#include "json.hpp"

#include "hydre/error.hpp"

namespace hydre::jsonl {

using json = nlohmann::json;

// Calls `fn(record, line_number)` for every non-blank line. Parse errors and
// any ValidationError thrown by `fn` are rethrown with "path:line:" context.
inline void for_each(const std::filesystem::path& path,
                     const std::function<void(const json&, std::size_t)>& fn) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto where = path.string() + ":" + std::to_string(line_no) + ": ";
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ValidationError(where + "malformed record: " + e.what());
    }
    try {
      fn(record, line_no);
    } catch (const json::exception& e) {
      throw ValidationError(where + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError(where + e.what());
    }
  }
}

// Compact single-line dump; non-ASCII passes through unescaped.
inline std::string dump(const json& record) { return record.dump(-1, ' ', false); }

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path, bool append = false)
      : out_(path, append ? std::ios::app : std::ios::trunc) {
    if (!out_) throw RuntimeFailure("cannot write " + path.string());
  }
  void write(const json& record) { out_ << dump(record) << '\n'; }
  void flush() { out_.flush(); }

 private:
  std::ofstream out_;
};

}  // namespace hydre::jsonl
