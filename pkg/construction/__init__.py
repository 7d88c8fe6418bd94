# این فایل باعث میشه پوشه construction به عنوان یک پکیج پایتون شناخته بشه
