#include "enrichkit/text.hpp"

#include <string>

namespace enrichkit {
namespace {

// Direct port of the reference C implementation. `k_` is the index of the last
// character of the current word, `j_` a general offset set by ends().
class PorterStemmer {
public:
    explicit PorterStemmer(std::string word) : b_(std::move(word)), k_(static_cast<int>(b_.size()) - 1) {}

    std::string run() {
        if (k_ <= 1) return b_;
        step1ab();
        if (k_ > 0) {
            step1c();
            step2();
            step3();
            step4();
            step5();
        }
        return b_.substr(0, static_cast<std::size_t>(k_ + 1));
    }

private:
    bool cons(int i) const {
        switch (b_[i]) {
            case 'a': case 'e': case 'i': case 'o': case 'u':
                return false;
            case 'y':
                return i == 0 ? true : !cons(i - 1);
            default:
                return true;
        }
    }

    // Number of VC sequences in b[0..j].
    int m() const {
        int n = 0;
        int i = 0;
        while (true) {
            if (i > j_) return n;
            if (!cons(i)) break;
            i++;
        }
        i++;
        while (true) {
            while (true) {
                if (i > j_) return n;
                if (cons(i)) break;
                i++;
            }
            i++;
            n++;
            while (true) {
                if (i > j_) return n;
                if (!cons(i)) break;
                i++;
            }
            i++;
        }
    }

    bool vowel_in_stem() const {
        for (int i = 0; i <= j_; i++)
            if (!cons(i)) return true;
        return false;
    }

    bool doublec(int j) const {
        if (j < 1) return false;
        if (b_[j] != b_[j - 1]) return false;
        return cons(j);
    }

    bool cvc(int i) const {
        if (i < 2 || !cons(i) || cons(i - 1) || !cons(i - 2)) return false;
        char ch = b_[i];
        return !(ch == 'w' || ch == 'x' || ch == 'y');
    }

    bool ends(std::string_view s) {
        int length = static_cast<int>(s.size());
        if (s.back() != b_[k_]) return false;
        if (length > k_ + 1) return false;
        if (b_.compare(k_ - length + 1, length, s) != 0) return false;
        j_ = k_ - length;
        return true;
    }

    void setto(std::string_view s) {
        b_.resize(static_cast<std::size_t>(j_ + 1));
        b_.append(s);
        k_ = j_ + static_cast<int>(s.size());
    }

    void r(std::string_view s) {
        if (m() > 0) setto(s);
    }

    void truncate() { b_.resize(static_cast<std::size_t>(k_ + 1)); }

    void step1ab() {
        if (b_[k_] == 's') {
            if (ends("sses"))
                k_ -= 2;
            else if (ends("ies"))
                setto("i");
            else if (b_[k_ - 1] != 's')
                k_--;
            truncate();
        }
        if (ends("eed")) {
            if (m() > 0) k_--;
            truncate();
        } else if ((ends("ed") || ends("ing")) && vowel_in_stem()) {
            k_ = j_;
            truncate();
            if (ends("at")) {
                setto("ate");
            } else if (ends("bl")) {
                setto("ble");
            } else if (ends("iz")) {
                setto("ize");
            } else if (doublec(k_)) {
                k_--;
                char ch = b_[k_];
                if (ch == 'l' || ch == 's' || ch == 'z') k_++;
                truncate();
            } else if (m() == 1 && cvc(k_)) {
                setto("e");
            }
        }
    }

    void step1c() {
        if (ends("y") && vowel_in_stem()) b_[k_] = 'i';
    }

    // In each group the first matching suffix wins, whether or not the
    // measure condition lets it be replaced.
    bool replace_first(std::initializer_list<std::pair<std::string_view, std::string_view>> rules) {
        for (const auto& [suffix, repl] : rules) {
            if (ends(suffix)) {
                r(repl);
                return true;
            }
        }
        return false;
    }

    void step2() {
        switch (b_[k_ - 1]) {
            case 'a': replace_first({{"ational", "ate"}, {"tional", "tion"}}); break;
            case 'c': replace_first({{"enci", "ence"}, {"anci", "ance"}}); break;
            case 'e': replace_first({{"izer", "ize"}}); break;
            case 'l':
                replace_first({{"bli", "ble"}, {"alli", "al"}, {"entli", "ent"}, {"eli", "e"}, {"ousli", "ous"}});
                break;
            case 'o': replace_first({{"ization", "ize"}, {"ation", "ate"}, {"ator", "ate"}}); break;
            case 's':
                replace_first({{"alism", "al"}, {"iveness", "ive"}, {"fulness", "ful"}, {"ousness", "ous"}});
                break;
            case 't': replace_first({{"aliti", "al"}, {"iviti", "ive"}, {"biliti", "ble"}}); break;
            case 'g': replace_first({{"logi", "log"}}); break;
            default: break;
        }
    }

    void step3() {
        switch (b_[k_]) {
            case 'e': replace_first({{"icate", "ic"}, {"ative", ""}, {"alize", "al"}}); break;
            case 'i': replace_first({{"iciti", "ic"}}); break;
            case 'l': replace_first({{"ical", "ic"}, {"ful", ""}}); break;
            case 's': replace_first({{"ness", ""}}); break;
            default: break;
        }
    }

    bool ends_any(std::initializer_list<std::string_view> suffixes) {
        for (auto s : suffixes)
            if (ends(s)) return true;
        return false;
    }

    void step4() {
        bool matched = false;
        switch (b_[k_ - 1]) {
            case 'a': matched = ends_any({"al"}); break;
            case 'c': matched = ends_any({"ance", "ence"}); break;
            case 'e': matched = ends_any({"er"}); break;
            case 'i': matched = ends_any({"ic"}); break;
            case 'l': matched = ends_any({"able", "ible"}); break;
            case 'n': matched = ends_any({"ant", "ement", "ment", "ent"}); break;
            case 'o':
                if (ends("ion") && j_ >= 0 && (b_[j_] == 's' || b_[j_] == 't'))
                    matched = true;
                else
                    matched = ends_any({"ou"});
                break;
            case 's': matched = ends_any({"ism"}); break;
            case 't': matched = ends_any({"ate", "iti"}); break;
            case 'u': matched = ends_any({"ous"}); break;
            case 'v': matched = ends_any({"ive"}); break;
            case 'z': matched = ends_any({"ize"}); break;
            default: break;
        }
        if (matched && m() > 1) {
            k_ = j_;
            truncate();
        }
    }

    void step5() {
        j_ = k_;
        if (b_[k_] == 'e') {
            int a = m();
            if (a > 1 || (a == 1 && !cvc(k_ - 1))) k_--;
            truncate();
        }
        if (b_[k_] == 'l' && doublec(k_) && m() > 1) {
            k_--;
            truncate();
        }
    }

    std::string b_;
    int k_;
    int j_ = 0;
};

bool is_lower_alpha(std::string_view w) {
    for (char c : w)
        if (c < 'a' || c > 'z') return false;
    return true;
}

}  // namespace

std::string porter_stem(std::string_view word) {
    if (word.empty() || !is_lower_alpha(word)) return std::string(word);
    return PorterStemmer(std::string(word)).run();
}

}  // namespace enrichkit
