#include "featstore/csv.hpp"

#include <fstream>

#include "featstore/errors.hpp"

namespace featstore::csv {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"' && field.empty()) {
            quoted = true;
        } else if (c == ',') {
            out.push_back(field);
            field.clear();
        } else if (c != '\r') {
            field += c;
        }
    }
    out.push_back(field);
    return out;
}

std::string escape_field(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

struct Reader::Impl {
    std::ifstream in;
    std::string line;
};

Reader::Reader(const std::string& path) : impl_(new Impl) {
    impl_->in.open(path);
    if (!impl_->in) {
        delete impl_;
        throw Error("FileNotFound", "cannot open " + path);
    }
    while (std::getline(impl_->in, impl_->line)) {
        if (impl_->line.empty() || impl_->line[0] == '#') continue;
        header_ = split_line(impl_->line);
        break;
    }
    for (size_t i = 0; i < header_.size(); ++i) index_[header_[i]] = static_cast<int>(i);
}

Reader::~Reader() { delete impl_; }

int Reader::column(const std::string& name) const {
    auto it = index_.find(name);
    return it == index_.end() ? -1 : it->second;
}

bool Reader::next(std::vector<std::string>& fields) {
    while (std::getline(impl_->in, impl_->line)) {
        if (impl_->line.empty() || impl_->line[0] == '#') continue;
        fields = split_line(impl_->line);
        return true;
    }
    return false;
}

}  // namespace featstore::csv
